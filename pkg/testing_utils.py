# testing_utils.py
# Worked-example constants, random instance generators and exact oracles for the test suites

import numpy as np
import sympy
from scipy import linalg

# Coefficient matrices of the worked 3x3 example, against e1^e2, e2^e3, e3^e1
WORKED_S = [
    np.array([[-1.0, -2.0, -1.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]]),
    np.array([[0.0, -1.0, -2.0], [0.0, 1.0, 2.0], [0.0, -1.0, -1.0]]),
    np.array([[-1.0, -1.0, 1.0], [1.0, 1.0, 0.0], [-1.0, -1.0, 0.0]]),
]
WORKED_LABELS = [(0, 1), (1, 2), (2, 0)]

WORKED_A = np.array([[3.0, -2.0, 1.0], [-2.0, 2.0, -1.0], [1.0, -1.0, 1.0]])

# Printed to six significant digits
WORKED_U = np.array([
    [1.56022, -0.689101, 0.301417],
    [-0.689101, 1.17254, -0.387684],
    [0.301417, -0.387684, 0.871119],
])

WORKED_CONJUGATES = [
    np.array([[0.0, -0.87112, -0.387685], [0.87112, 0.0, -0.301416], [0.387685, 0.301416, 0.0]]),
    np.array([[0.0, -0.086268, -0.483435], [0.086268, 0.0, 0.871119], [0.483435, -0.871119, 0.0]]),
    np.array([[0.0, -0.483435, 0.784851], [0.483435, 0.0, 0.387685], [-0.784851, -0.387685, 0.0]]),
]


def random_skew(rng, m):
    G = rng.standard_normal((m, m))
    return G - G.T


def random_orthogonal(rng, m):
    Q, R = linalg.qr(rng.standard_normal((m, m)))
    return Q * np.sign(np.diag(R))


def random_conjugator(rng, m, max_log10_cond=2.0):
    """Random invertible P with cond(P) <= 10**max_log10_cond"""
    singular_values = 10.0 ** rng.uniform(0.0, max_log10_cond, m)
    singular_values /= singular_values.min()
    return random_orthogonal(rng, m) @ np.diag(singular_values) @ random_orthogonal(rng, m)


def random_skewable_set(rng, m, k, max_log10_cond=2.0):
    """k matrices P T P^-1 sharing one P, with T random skew; returns (matrices, P, Ts)"""
    P = random_conjugator(rng, m, max_log10_cond)
    P_inv = linalg.inv(P)
    Ts = [random_skew(rng, m) for _ in range(k)]
    return [P @ T @ P_inv for T in Ts], P, Ts


def random_unit_det_non_orthogonal(rng, m, min_defect=0.1):
    while True:
        A = rng.standard_normal((m, m))
        det = linalg.det(A)
        if abs(det) < 1e-3:
            continue
        if det < 0:
            A[:, 0] *= -1.0
            det = -det
        A = A / det ** (1.0 / m)
        if linalg.norm(A.T @ A - np.eye(m)) >= min_defect:
            return A


def random_integer_matrices(rng, m, k, low=-2, high=2):
    while True:
        matrices = [rng.integers(low, high + 1, size=(m, m)).astype(float) for _ in range(k)]
        if any(np.any(S) for S in matrices):
            return matrices


def _exact(matrix):
    return sympy.Matrix([[sympy.Integer(int(round(x))) for x in row] for row in np.asarray(matrix)])


def exact_rank(matrices):
    """Rank of the vectorized integer matrices in exact arithmetic"""
    rows = [np.asarray(S).reshape(-1) for S in matrices]
    if not rows:
        return 0
    return _exact(np.array(rows)).rank()


def exact_null_dim(matrices):
    """Dimension of {X symmetric : S X + X S^T = 0 for all S} in exact arithmetic"""
    m = np.asarray(matrices[0]).shape[0]
    index = [(p, q) for p in range(m) for q in range(p, m)]
    upper = np.triu_indices(m)
    columns = []
    for p, q in index:
        E = np.zeros((m, m), dtype=np.int64)
        E[p, q] = E[q, p] = 1
        image = []
        for S in matrices:
            S = np.asarray(S).round().astype(np.int64)
            Y = S @ E + E @ S.T
            image.extend(Y[upper].tolist())
        columns.append(image)
    system = sympy.Matrix(columns).T
    return len(index) - system.rank()
