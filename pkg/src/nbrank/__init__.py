"""Learning-to-rank rescoring for ASR N-best lists."""
__version__ = "0.1.0"
