"""Small hand-built nilpotent orbit data shared by several test modules."""
from hodgelim.filtrations import DecreasingFiltration, IncreasingFiltration, filtration_from_grading
from hodgelim.linalg import Matrix, Subspace
from hodgelim.scalars import GQ

E = Matrix.unit
J = Matrix([[0, 1], [0, 0]])
I2 = Matrix.identity(2)
Z2 = Matrix.zeros(2, 2)


def kron(a: Matrix, b: Matrix) -> Matrix:
    n, m = a.nrows, b.nrows
    return Matrix([[a[i // m, j // m] * b[i % m, j % m] for j in range(n * m)] for i in range(n * m)])


def dsum(a: Matrix, b: Matrix) -> Matrix:
    n, m = a.nrows, b.nrows
    rows = [[GQ(0)] * (n + m) for _ in range(n + m)]
    for i in range(n):
        for j in range(n):
            rows[i][j] = a[i, j]
    for i in range(m):
        for j in range(m):
            rows[n + i][n + j] = b[i, j]
    return Matrix(rows)


def pure(n: int, w: int) -> IncreasingFiltration:
    return IncreasingFiltration(n, {w - 1: Subspace.zero(n), w: Subspace.full(n)})


# Hodge grading of the standard weight-one limit on C^2 (N e1 = e0, F^1 = <e1>)
H1 = Matrix.diag([0, 1])


def tensor_data():
    F = filtration_from_grading(kron(H1, I2) + kron(I2, H1), decreasing=True)
    return [kron(J, I2), kron(I2, J)], F, pure(4, 2)


def direct_sum_data():
    F = filtration_from_grading(dsum(H1, H1), decreasing=True)
    return [dsum(J, Z2), dsum(Z2, J)], F, pure(4, 1)


def nested_data():
    Ns, F, W = tensor_data()
    return [Ns[0], Ns[0] + Ns[1]], F, W


def extension3_data():
    W = IncreasingFiltration(3, {-1: Subspace.coordinate(3, [1, 2]), 0: Subspace.full(3)})
    F = DecreasingFiltration(3, {-1: Subspace.full(3), 0: Subspace.coordinate(3, [0, 2])})
    return [E(3, 1, 2), E(3, 1, 2) + E(3, 1, 0)], F, W


def extension4_data(nested: bool = True):
    W = IncreasingFiltration(4, {-1: Subspace.coordinate(4, [2, 3]), 0: Subspace.full(4)})
    F = DecreasingFiltration(4, {-1: Subspace.full(4), 0: Subspace.coordinate(4, [0, 1, 3])})
    N1 = E(4, 2, 3)
    N2 = N1 + E(4, 2, 0) if nested else E(4, 2, 0)
    return [N1, N2], F, W


def commuting_pairs() -> dict:
    """name -> (Ns, W) for the cone checks."""
    tensor, _, W2 = tensor_data()
    out = {"tensor": (tensor, W2), "tensor-swapped": (tensor[::-1], W2)}
    for name, (Ns, _, W) in {
        "direct-sum": direct_sum_data(),
        "nested": nested_data(),
        "extension": extension3_data(),
        "extension4": extension4_data(),
    }.items():
        out[name] = (Ns, W)
    return out


def twist_suite() -> dict:
    """name -> (Ns, F, W) with r = 2, for grading chains and the twist fit."""
    return {
        "extension": extension3_data(),
        "extension4": extension4_data(nested=False),
        "tensor": tensor_data(),
        "direct-sum": direct_sum_data(),
        "nested": nested_data(),
    }


def deligne_cases() -> list:
    """(name, N, F, W) one-variable cases for the Deligne grading."""
    W2 = pure(2, 1)
    F2 = DecreasingFiltration(2, {0: Subspace.full(2), 1: Subspace.coordinate(2, [1])})
    ext4 = extension4_data()
    ext3 = extension3_data()
    W3 = pure(3, 2)
    F3 = DecreasingFiltration(3, {0: Subspace.full(3), 1: Subspace.coordinate(3, [1, 2]), 2: Subspace.coordinate(3, [2])})
    return [
        ("sl2", J, F2, W2),
        ("rank4", ext4[0][1], ext4[1], ext4[2]),
        ("ext3", ext3[0][1], ext3[1], ext3[2]),
        ("J3", Matrix([[0, 1, 0], [0, 0, 2], [0, 0, 0]]), F3, W3),
    ]
