"""Python front end to the seqrisk C++ core."""

import json

from . import _seqrisk
from ._seqrisk import chi_square, fleiss_kappa, graded_scores, hash_embed, sord_targets

__all__ = [
    "analyze",
    "chi_square",
    "evaluate",
    "fleiss_kappa",
    "generate",
    "graded_scores",
    "hash_embed",
    "main",
    "run_cli",
    "sord_targets",
]


def generate(out, users=200, seed=0, **kwargs):
    """Write a synthetic corpus (and its ground-truth sidecar); returns the user count."""
    return _seqrisk.generate(str(out), users, seed, **kwargs)


def analyze(corpus, window_length=4):
    return json.loads(_seqrisk.analyze(str(corpus), window_length))


def evaluate(corpus, config=None, folds=5):
    return json.loads(_seqrisk.evaluate(str(corpus), json.dumps(config or {}), folds))


def run_cli(*args):
    """Run a subcommand in-process. Returns (exit_code, stdout, stderr)."""
    return _seqrisk.run_cli([str(a) for a in args])


def main(argv=None):
    import sys

    code, out, err = run_cli(*(sys.argv[1:] if argv is None else argv))
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code
