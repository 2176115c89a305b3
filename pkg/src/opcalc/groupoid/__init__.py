"""Grid model of the tangent groupoid of the circle."""
from .grid import CircleGrid, VGrid, t_grid
from .kernel import TangentKernel, TangentAlgebra, convolve, adjoint, cstar_norm, pi_t_norm, pi_x_norms
from .operators import (CircleFunction, CircleOperator, Frame, STANDARD_FRAME, SECOND_FRAME, dnc_lift,
                        lift_left, lift_right, lift_diff_op, delta_D, delta_alpha, hat_delta)
from .corpus import GridSpec, corpus, schwartz_corpus, negative_controls, gaussian

__all__ = ["CircleGrid", "VGrid", "t_grid", "TangentKernel", "TangentAlgebra", "convolve", "adjoint",
           "cstar_norm", "pi_t_norm", "pi_x_norms", "CircleFunction", "CircleOperator", "Frame",
           "STANDARD_FRAME", "SECOND_FRAME", "dnc_lift", "lift_left", "lift_right", "lift_diff_op",
           "delta_D", "delta_alpha", "hat_delta", "GridSpec", "corpus", "schwartz_corpus",
           "negative_controls", "gaussian"]
