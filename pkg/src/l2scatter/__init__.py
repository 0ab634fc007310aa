"""Scattering networks built from tight frames and complex-modulus pooling."""
from .classify import (ClassTemplates, LinearReadout, averaging_error_bounds,
                       classify_nearest, fit_readouts, fit_templates, predict_readouts,
                       readout_equivalence)
from .errors import (DimensionError, EmptyInputError, InvalidNetworkError,
                     InvalidPartitionError, NumericalFailure)
from .frame import (TightFrameOperator, apply_complex, apply_modulus, pairing_operator,
                    random_tight_frame, validate)
from .learn import (LayerObjectiveState, OptimizerConfig, build_network_greedy,
                    class_separation, gradient, objective, optimize_layer)
from .partition import BlockPartition, apply_average, residual
from .scatter import (DiscreteDistribution, LayerSequence, ScatteringNetwork,
                      averaged_scatter, empirical_scatter, expected_scatter_exact,
                      mean_estimation_bound)

__version__ = "0.1.0"
