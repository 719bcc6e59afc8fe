"""Quaternion arithmetic, the augmented representation and HR derivatives in a few lines.

Run with ``python demos/quaternion_basics.py``.
"""

import numpy as np

from hrcalc import hr
from hrcalc import linalg as ql
from hrcalc import quaternion as qt

rng = np.random.default_rng(0)

# The units multiply anticommutatively.
print("i j =", qt.mul(qt.I, qt.J), " j i =", qt.mul(qt.J, qt.I))

# Involutions reflect the two imaginary parts orthogonal to the axis.
q = qt.quat(1.0, 2.0, 3.0, 4.0)
for name, axis in (("i", qt.I), ("j", qt.J), ("k", qt.K)):
    print(f"involution about {name}:", qt.involution(q, axis))
print("conjugate from involutions:", qt.conj_from_involutions(q))

# The augmented vector stacks q and its three involutions; A maps real
# components to it and A^H / 4 maps back.
A = ql.build_augmentation_matrix(1)
print("max |A A^H / 4 - I| =", np.max(np.abs(ql.qmatmul(A, 0.25 * ql.hermitian(A)) - ql.qeye(4))))

# The HR derivative of the conjugate with respect to q is -1/2: a conjugate
# cannot be linearised in q alone.
at = qt.random_quaternion(rng, (1, 4))[0]
print("d q* / d q =", hr.hr_derivative(lambda x: qt.conj(x[..., 0, :]), at))

# The gradient of the squared error of a widely linear filter has the closed
# form -1/2 e conj(z^a), which drives the QLMS update.
z = qt.random_quaternion(rng, 2)
w = qt.random_quaternion(rng, 8)
y = qt.random_quaternion(rng)


def cost(wv):
    return np.sum((y - ql.qdot(wv, ql.augment(z))) ** 2, axis=-1)


numeric = hr.hr_derivative(cost, w, conjugate=True, vectorized=True)
err = y - ql.qdot(w, ql.augment(z))
closed = -0.5 * qt.mul(err, qt.conj(ql.augment(z)))
print("gradient check, max abs difference:", np.max(np.abs(numeric - closed)))
