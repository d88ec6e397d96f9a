"""Self-supervised 6-DoF object pose annotation on a simulated tabletop."""

try:
    from poseloop._core import *  # noqa: F401,F403  installed wheel layout
    from poseloop._core import __version__  # noqa: F401
except ImportError:  # build-tree layout: _core sits next to us on PYTHONPATH
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
