"""Clip-text curation toolkit: narration filtering, contextual clip pairing,
taxonomy tagging, contrastive objectives with analytic gradients, MCQ
benchmark construction and retrieval metrics."""

try:
    from ._egocurate import *  # noqa: F401,F403  (installed layout)
    from ._egocurate import __version__  # noqa: F401
except ImportError:
    # build-tree layout: the extension sits directly on sys.path
    from _egocurate import *  # noqa: F401,F403
    from _egocurate import __version__  # noqa: F401
