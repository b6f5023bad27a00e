"""A stationary point of the rank-one problem that is not a local minimum.

Keeping the second singular pair of diag(3, 2, 1) gives a stationary
point. Perturbing it toward the leading pair lowers the error, while
perturbing toward the third pair raises it.
"""
import numpy as np

from nmfdescent import saddle_probe

w = saddle_probe(np.diag([3.0, 2.0, 1.0]), 1, kept=[1], eps=0.1)
print(f"toward the leading pair: {w.err_lower:.5f}")
print(f"at the stationary point: {w.err_stationary:.5f}")
print(f"toward the trailing pair: {w.err_upper:.5f}")
