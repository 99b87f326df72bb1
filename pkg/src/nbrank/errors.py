"""Exception types. Every error carries its class name so the CLI can report it."""


class NbrankError(Exception):
    """Base class for all package errors."""


class ParseError(NbrankError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class DuplicateUtterance(NbrankError):
    def __init__(self, utt_id):
        self.utt_id = utt_id
        super().__init__(f"duplicate utt_id {utt_id!r}")


class MissingReference(NbrankError):
    def __init__(self, utt_id):
        self.utt_id = utt_id
        super().__init__(f"utterance {utt_id!r} has no reference transcript")


class EmptyCorpus(NbrankError):
    pass


class MissingFeature(NbrankError):
    def __init__(self, utt_id, hyp_index, block):
        self.utt_id = utt_id
        self.hyp_index = hyp_index
        self.block = block
        super().__init__(f"utterance {utt_id!r} hypothesis {hyp_index}: missing feature {block!r}")


class DimMismatch(NbrankError):
    pass


class SchemaMismatch(NbrankError):
    pass


class Misalignment(NbrankError):
    def __init__(self, utt_id, message="label/vector count mismatch"):
        self.utt_id = utt_id
        super().__init__(f"utterance {utt_id!r}: {message}")


class NoPairs(NbrankError):
    pass


class NonFiniteFeature(NbrankError):
    pass


class InvalidK(NbrankError):
    pass


class ConfigError(NbrankError):
    pass
