"""Branching-diffusion simulation and verification toolkit."""

try:
    from ._superflow import *          # installed wheel layout
    from ._superflow import __version__
except ImportError:                     # in-tree: built module on sys.path
    from _superflow import *
    from _superflow import __version__
