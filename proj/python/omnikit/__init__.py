from ._omnikit import *  # noqa: F401,F403
