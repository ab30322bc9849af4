"""
exprtune: model-based tuning of algorithm parameters.

Genetic programming evolves expressions that map instance features (the
bitstring length ``n``, the jump width ``m``) to a solver parameter, and
keeps the expressions that perform best on a training set of instances.
"""

from exprtune.settings import Config

__version__ = Config.VERSION
