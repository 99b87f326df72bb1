"""Backoff n-gram language model with interpolated Witten-Bell smoothing.

Probabilities and backoff weights are stored as log10 values, the ARPA
convention. For an observed context ``h`` with ``c(h)`` tokens following it and
``T(h)`` distinct followers::

    p(w | h) = (c(h, w) + T(h) * p(w | h')) / (c(h) + T(h))

where ``h'`` drops the oldest word. The unigram level interpolates with the
uniform distribution over the predictable vocabulary (everything except
``<s>``). Unseen words in an observed context get the backoff weight
``T(h) / (c(h) + T(h))`` times the lower-order estimate.
"""

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from types import MappingProxyType

from ._jsonio import atomic_write
from .errors import EmptyCorpus, ParseError

BOS, EOS, UNK = "<s>", "</s>", "<unk>"
NO_PROB = -99.0  # ARPA spelling of log10(0)
LN10 = math.log(10.0)


@dataclass(frozen=True)
class NgramModel:
    order: int
    vocab: MappingProxyType  # word -> id
    probs: MappingProxyType  # n-gram tuple -> log10 p
    backoffs: MappingProxyType  # context tuple -> log10 backoff weight

    def map_token(self, word):
        if word in self.vocab and word != BOS:
            return word
        return UNK

    def predictable(self):
        """Words a conditional distribution ranges over."""
        return [w for w in self.vocab if w != BOS]

    def logprob10(self, word, history=()):
        """log10 p(word | history) by standard backoff lookup."""
        history = tuple(history)[-(self.order - 1):] if self.order > 1 else ()
        ngram = history + (word,)
        total = 0.0
        probs, backoffs = self.probs, self.backoffs
        while True:
            lp = probs.get(ngram)
            if lp is not None:
                return total + lp
            if len(ngram) == 1:
                return total + NO_PROB
            total += backoffs.get(ngram[:-1], 0.0)
            ngram = ngram[1:]


def _freeze(model_order, vocab_words, probs, backoffs):
    vocab = MappingProxyType({w: i for i, w in enumerate(vocab_words)})
    return NgramModel(model_order, vocab, MappingProxyType(dict(probs)), MappingProxyType(dict(backoffs)))


def _events(sentence, order):
    padded = (BOS,) + tuple(sentence) + (EOS,)
    for i in range(1, len(padded)):
        for n in range(1, order + 1):
            if i - n + 1 < 0:
                break
            yield padded[i - n + 1 : i + 1]


def train_ngram(corpus, order=3):
    """Train on ``corpus`` (a sequence of token sequences).

    Words seen only once are mapped to ``<unk>``; every sentence is wrapped in
    ``<s> ... </s>``.
    """
    sentences = [tuple(s) for s in corpus]
    if not sentences:
        raise EmptyCorpus("cannot train an n-gram model on an empty corpus")
    if order < 1:
        raise ValueError("order must be >= 1")

    freq = Counter(w for s in sentences for w in s)
    keep = {w for w, c in freq.items() if c >= 2 and w not in (BOS, EOS, UNK)}
    vocab_words = sorted(keep | {BOS, EOS, UNK})
    mapped = [tuple(w if w in keep else UNK for w in s) for s in sentences]

    counts = [Counter() for _ in range(order + 1)]
    for s in mapped:
        for gram in _events(s, order):
            counts[len(gram)][gram] += 1

    probs = {}
    backoffs = {}

    n_pred = len(vocab_words) - 1
    total = sum(counts[1].values())
    types = len(counts[1])
    for w in vocab_words:
        if w == BOS:
            probs[(w,)] = NO_PROB
            continue
        p = (counts[1][(w,)] + types / n_pred) / (total + types)
        probs[(w,)] = math.log10(p)

    for n in range(2, order + 1):
        by_context = defaultdict(list)
        for gram, c in counts[n].items():
            by_context[gram[:-1]].append((gram[-1], c))
        lower = _freeze(n - 1, vocab_words, probs, backoffs)
        level = {}
        for ctx, followers in by_context.items():
            c_h = sum(c for _, c in followers)
            t_h = len(followers)
            for w, c in followers:
                p_low = 10.0 ** lower.logprob10(w, ctx[1:])
                level[ctx + (w,)] = math.log10((c + t_h * p_low) / (c_h + t_h))
            backoffs[ctx] = math.log10(t_h / (c_h + t_h))
        probs.update(level)

    return _freeze(order, vocab_words, probs, backoffs)


def sentence_logprob(model, tokens):
    """log10 probability of ``tokens`` including the ``</s>`` event.

    Unknown words are scored as ``<unk>``.
    """
    words = [BOS] + [model.map_token(t) for t in tokens] + [EOS]
    keep = model.order - 1
    total = 0.0
    for i in range(1, len(words)):
        total += model.logprob10(words[i], words[max(0, i - keep) : i] if keep else ())
    return total


def perplexity(model, tokens):
    return 10.0 ** (-sentence_logprob(model, tokens) / (len(tokens) + 1))


# ---------------------------------------------------------------------------
# ARPA text format


def write_arpa(model, path, comment=None):
    """Write ARPA text. ``comment`` lines go before ``\\data\\``, where readers ignore them."""
    by_order = defaultdict(list)
    for gram in model.probs:
        by_order[len(gram)].append(gram)
    with atomic_write(path) as fh:
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"# {line}\n")
            fh.write("\n")
        fh.write("\\data\\\n")
        for n in range(1, model.order + 1):
            fh.write(f"ngram {n}={len(by_order[n])}\n")
        for n in range(1, model.order + 1):
            fh.write(f"\n\\{n}-grams:\n")
            for gram in sorted(by_order[n]):
                line = f"{model.probs[gram]!r}\t{' '.join(gram)}"
                if gram in model.backoffs:
                    line += f"\t{model.backoffs[gram]!r}"
                fh.write(line + "\n")
        fh.write("\n\\end\\\n")


def read_arpa(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    i = 0
    while i < len(lines) and lines[i].strip() != "\\data\\":
        i += 1
    if i == len(lines):
        raise ParseError("no \\data\\ section", path=path)
    i += 1

    declared = {}
    while i < len(lines) and lines[i].strip():
        line = lines[i].strip()
        if not line.startswith("ngram "):
            raise ParseError(f"expected 'ngram N=count', got {line!r}", line=i + 1, path=path)
        try:
            n, count = line[6:].split("=")
            declared[int(n)] = int(count)
        except ValueError:
            raise ParseError(f"malformed count line {line!r}", line=i + 1, path=path) from None
        i += 1
    if not declared or sorted(declared) != list(range(1, max(declared) + 1)):
        raise ParseError("ngram counts must cover orders 1..N", line=i + 1, path=path)
    order = max(declared)

    probs, backoffs, vocab_words = {}, {}, []
    seen_orders = set()
    current = None
    found = 0
    ended = False

    def close_section(lineno):
        if current is not None and found != declared[current]:
            raise ParseError(
                f"{current}-grams: declared {declared[current]} entries, found {found}", line=lineno, path=path
            )

    for j in range(i, len(lines)):
        line = lines[j].strip()
        lineno = j + 1
        if not line:
            continue
        if line == "\\end\\":
            close_section(lineno)
            ended = True
            break
        if line.startswith("\\"):
            close_section(lineno)
            if not (line.endswith("-grams:") and line[1:-7].isdigit()):
                raise ParseError(f"unknown section header {line!r}", line=lineno, path=path)
            current = int(line[1:-7])
            if current not in declared or current in seen_orders:
                raise ParseError(f"unexpected section {line!r}", line=lineno, path=path)
            seen_orders.add(current)
            found = 0
            continue
        if current is None:
            raise ParseError("n-gram entry outside a section", line=lineno, path=path)
        parts = line.split()
        if len(parts) not in (current + 1, current + 2):
            raise ParseError(f"expected {current} words plus scores", line=lineno, path=path)
        try:
            lp = float(parts[0])
            bow = float(parts[current + 1]) if len(parts) == current + 2 else None
        except ValueError:
            raise ParseError("non-numeric score", line=lineno, path=path) from None
        gram = tuple(parts[1 : current + 1])
        probs[gram] = lp
        if bow is not None:
            backoffs[gram] = bow
        if current == 1:
            vocab_words.append(gram[0])
        found += 1

    if not ended:
        raise ParseError("missing \\end\\ marker", line=len(lines), path=path)
    if seen_orders != set(declared):
        raise ParseError("declared orders without sections", path=path)
    return _freeze(order, vocab_words, probs, backoffs)
