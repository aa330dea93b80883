"""State-space modelling and simulation of a hybrid (local + cloud) article database."""
from .controller import (FeedbackSign, GainMatrix, Oscillation, ThresholdPolicy, close_loop,
                         detect_oscillation, stabilizing_gain_search, threshold_step)
from .hybridsim import (AlwaysHybrid, AlwaysLocal, ArticleCorpus, BenchRow, Controlled,
                        HybridSystem, QueryRequest, QueryTrace, Route, SystemState, Topology,
                        build_corpus, execute_hybrid, execute_local, route, run_benchmark,
                        run_stream, state_vector)
from .statespace import (BoxConstraint, LinearModel, ResponseClass, Stability, Trajectory,
                         classify_stability, controllability_matrix, eigenvalues,
                         is_controllable, is_observable, observability_matrix,
                         reachable_set_bruteforce, simulate, spectral_radius, step,
                         step_response)
from .sysid import FitResult, fit_linear, predict, prediction_rmse

__version__ = "0.1.0"
