import numpy as np
import pytest

from limitops import (
    BandOperator,
    ConstantField,
    ExpressionField,
    FAMILY_CAVEAT,
    HalfspacePredicate,
    InvalidConfigError,
    PeriodicField,
    Ray,
    SeededRandomField,
    Space,
    SubspaceProjection,
    TableField,
    UnsupportedConstructionError,
    build_partition,
    compactness_test,
    ess_norm_estimate,
    essential_spectrum_estimate,
    floquet_spectrum,
    fredholm_test,
    hausdorff_distance,
    identity,
    invertibility_estimate,
    laplacian_stencil,
    lower_norm_localized,
    lower_norm_window,
    multiplication,
    nu_grid_indicator,
    shift_operator,
    spectrum_estimate_for,
    symbol_spectrum,
)

from conftest import window


# -- lower norms ------------------------------------------------------------


def test_lower_norm_window_matches_dense_oracle(z1):
    A = laplacian_stencil(z1) + multiplication(z1, SeededRandomField(2))
    w = window(z1, 10)
    rows = window(z1, 11)
    M = A.block(rows.points, w.points)
    ref = np.linalg.svd(M, compute_uv=False)[-1]
    assert np.isclose(lower_norm_window(A, w), ref, atol=1e-12)


def test_lower_norm_monotone_under_enlargement(z1):
    A = laplacian_stencil(z1) + multiplication(z1, PeriodicField([0.3, -0.8, 1.1]))
    vals = [lower_norm_window(A, window(z1, r)) for r in (5, 10, 20, 40)]
    for a, b in zip(vals, vals[1:]):
        assert b <= a + 1e-12


def test_lower_norm_empty_support_warns(z1):
    A = laplacian_stencil(z1)
    with pytest.warns(UserWarning):
        v = lower_norm_window(A, np.empty((0, 1), dtype=np.int64))
    assert v == np.inf


def test_lower_norm_identity_is_one_for_any_p(z1):
    I = identity(z1)
    w = window(z1, 6)
    assert np.isclose(lower_norm_window(I, w), 1.0, atol=1e-12)
    for p in (1.5, 3.0):
        # every quotient ||Ix||_p / ||x||_p equals one
        assert np.isclose(lower_norm_window(I, w, p=p), 1.0, atol=1e-9)


def test_lower_norm_scaled_shift(z1):
    V = shift_operator(z1, (1,)).scaled(0.25)
    w = window(z1, 6)
    assert np.isclose(lower_norm_window(V, w), 0.25, atol=1e-12)


def test_localized_lower_norm_dominates_plain(z1):
    A = laplacian_stencil(z1) + multiplication(z1, SeededRandomField(7))
    pred = HalfspacePredicate((1,), -100)
    scope = window(z1, 30)
    part = build_partition(z1, window(z1, 31), 0.5)
    sup = scope.points[pred.test(z1, scope.points)]
    nu = lower_norm_window(A, sup)
    nut = lower_norm_localized(A, pred, part, scope)
    assert nu <= nut + 1e-12


# -- invertibility ----------------------------------------------------------


def test_invertibility_of_clearly_invertible_operator(z1):
    A = laplacian_stencil(z1) + multiplication(z1, ConstantField(5.0))
    est = invertibility_estimate(A, (10, 20, 40))
    assert est.verdict == "evidenceInvertible"
    assert est.margin > 1.0
    assert est.nu_upper == sorted(est.nu_upper, reverse=True)
    d = est.to_descriptor()
    assert d["verdict"] == est.verdict
    assert d["radii"] == [10, 20, 40]


def test_invertibility_flags_shifted_laplacian(z1):
    # 0 lies in the spectrum; window lower norms collapse
    A = laplacian_stencil(z1)
    est = invertibility_estimate(A, (20, 40, 80))
    assert est.verdict == "notInvertibleAtLevel"
    assert est.margin < 0.05


def test_invertibility_requires_increasing_schedule(z1):
    with pytest.raises(InvalidConfigError):
        invertibility_estimate(identity(z1), (10, 10))


def test_invertibility_uses_adjoint_exponent(z1):
    est = invertibility_estimate(identity(z1), (4, 8, 16), p=1.5)
    assert est.p == 1.5
    assert est.verdict == "evidenceInvertible"
    assert np.isclose(est.margin, 1.0, atol=1e-6)


# -- oracles ----------------------------------------------------------------


def test_symbol_spectrum_of_laplacian_is_interval(z1):
    pts = symbol_spectrum(laplacian_stencil(z1))
    assert np.abs(pts.imag).max() <= 1e-12
    assert np.isclose(pts.real.min(), -2.0, atol=1e-5)
    assert np.isclose(pts.real.max(), 2.0, atol=1e-5)


def test_symbol_spectrum_rejects_varying_coefficients(z1):
    with pytest.raises(InvalidConfigError):
        symbol_spectrum(multiplication(z1, ExpressionField("n")))


def test_symbol_spectrum_shift_is_circle(z1):
    pts = symbol_spectrum(shift_operator(z1, (1,)), theta_grid=512)
    assert np.allclose(np.abs(pts), 1.0, atol=1e-12)


def test_symbol_spectrum_2d(z2):
    pts = symbol_spectrum(laplacian_stencil(z2), theta_grid=4096)
    assert np.abs(pts.imag).max() <= 1e-12
    assert np.isclose(pts.real.min(), -4.0, atol=1e-2)
    assert np.isclose(pts.real.max(), 4.0, atol=1e-2)


def test_symbol_spectrum_fiber_matrix():
    # both hoppings target the other fiber slot, so the 2x2 symbol is
    # off-diagonal with entry 2 + 2 cos(theta); eigenvalues sweep [-4, 4]
    sp = Space(kind="lattice", dim=1, fiber=2)
    A = BandOperator(sp, {(0, 1): 1.0, (1, 1): 1.0})
    A = A + A.adjoint()
    pts = symbol_spectrum(A, theta_grid=1024)
    assert np.abs(pts.imag).max() <= 1e-8
    assert np.isclose(pts.real.min(), -4.0, atol=1e-9)
    assert np.isclose(pts.real.max(), 4.0, atol=1e-9)
    assert np.abs(pts).min() <= 1e-12


def test_floquet_period2_band_edges(z1):
    v = PeriodicField([1.0, -1.0])
    A = laplacian_stencil(z1) + multiplication(z1, v)
    pts = floquet_spectrum(A, theta_grid=2048)
    assert np.abs(pts.imag).max() <= 1e-9
    a = np.abs(pts.real)
    # bands are +-sqrt(3 + 2 cos theta): every value in [1, sqrt(5)]
    assert np.isclose(a.min(), 1.0, atol=1e-3)
    assert np.isclose(a.max(), np.sqrt(5.0), atol=1e-3)
    assert ((a >= 1.0 - 1e-9) & (a <= np.sqrt(5.0) + 1e-9)).all()


def test_floquet_matches_symbol_for_constant_operators(z1):
    A = laplacian_stencil(z1) + multiplication(z1, ConstantField(0.5))
    f = floquet_spectrum(A, theta_grid=512)
    s = symbol_spectrum(A, theta_grid=512)
    assert hausdorff_distance(f, s) <= 1e-9


def test_floquet_rejects_unsupported_shapes(z2):
    with pytest.raises(UnsupportedConstructionError):
        floquet_spectrum(laplacian_stencil(z2))


# -- banded nu-grid ----------------------------------------------------------


def test_nu_grid_matches_dense_lower_norms(z1):
    A = laplacian_stencil(z1) + multiplication(z1, PeriodicField([0.5, 0.0, -0.5]))
    zs = np.array([0.0 + 0.0j, 1.0 + 0.0j, 2.5 + 0.5j, 0.3 - 1.2j])
    got = nu_grid_indicator(A, zs, radius=60)
    w = window(z1, 60)
    rows = window(z1, 61)
    for i, z in enumerate(zs):
        Mz = A.sub_scalar(z)
        direct = np.linalg.svd(Mz.block(rows.points, w.points), compute_uv=False)[-1]
        adj = np.linalg.svd(Mz.adjoint().block(rows.points, w.points),
                            compute_uv=False)[-1]
        assert np.isclose(got[i], min(direct, adj), rtol=1e-4, atol=1e-8)


def test_nu_grid_real_kernel_mirror_symmetry(z1):
    A = laplacian_stencil(z1)
    zs = np.array([0.5 + 0.7j, 0.5 - 0.7j, -1.0 + 0.2j, -1.0 - 0.2j])
    got = nu_grid_indicator(A, zs, radius=50)
    assert got[0] == got[1]
    assert got[2] == got[3]


def test_nu_grid_threads_deterministic(z1):
    # 1100 points span several sweep chunks, so the pool really runs
    A = laplacian_stencil(z1) + multiplication(z1, PeriodicField([0.2, -0.2]))
    zs = (np.linspace(-2.5, 2.5, 1100) + 0.1j).astype(np.complex128)
    a = nu_grid_indicator(A, zs, radius=40, threads=1)
    b = nu_grid_indicator(A, zs, radius=40, threads=8)
    assert np.array_equal(a, b)


def test_spectrum_estimate_method_dispatch(z1):
    lap = laplacian_stencil(z1)
    est = spectrum_estimate_for(lap, "lap")
    assert est.method == "symbolOracle"
    per = lap + multiplication(z1, PeriodicField([1.0, -1.0]))
    est2 = spectrum_estimate_for(per, "per")
    assert est2.method == "floquet"
    rand = lap + multiplication(z1, SeededRandomField(3))
    est3 = spectrum_estimate_for(rand, "rand", radius=40, pitch=0.25, tau=0.5)
    assert est3.method == "nuGrid"
    assert est3.meta["windowRadius"] == 40
    assert est3.indicators.size == est3.points.size
    assert 0 < est3.cloud.size < est3.points.size


def test_spectrum_estimate_descriptor(z1):
    est = spectrum_estimate_for(laplacian_stencil(z1), "lap", tau=0.05)
    d = est.to_descriptor()
    assert d["method"] == "symbolOracle"
    assert d["limitOperatorLabel"] == "lap"
    assert len(d["points"]) == est.cloud.size
    assert d["meta"]["thetaGrid"] == 2048


# -- verdicts ----------------------------------------------------------------


def test_compactness_of_finitely_supported_kernel(z1):
    A = BandOperator(z1, {(0,): TableField({(0,): 3.0, (1,): -1.0}),
                          (2,): TableField({(5,): 2.0})})
    out = compactness_test(A, [Ray((1,)), Ray((-1,))])
    assert out["verdict"] == "compact-consistent"
    assert out["maxLimitNorm"] == 0.0
    for cert in out["sequences"]:
        assert max(cert["limitNorms"]) == 0.0
        assert cert["exact"]


def test_identity_is_not_compact(z1):
    out = compactness_test(identity(z1), [Ray((1,))])
    assert out["verdict"] == "not-compact-consistent"
    assert out["maxLimitNorm"] == 1.0


def test_decaying_potential_is_compact_consistent(z1):
    M = multiplication(z1, ExpressionField("exp(0 - abs(n) / 6)"))
    out = compactness_test(M, [Ray((1,)), Ray((-1,))], tol=1e-9)
    assert out["verdict"] == "compact-consistent"
    for cert in out["sequences"]:
        assert not cert["exact"]
        assert max(cert["limitNorms"]) <= 1e-9
    assert out["caveat"] == FAMILY_CAVEAT


def test_fredholm_compressed_shift_consistent(z1):
    proj = SubspaceProjection(z1, HalfspacePredicate((1,), 0))
    V = shift_operator(z1, (1,))
    out = fredholm_test(V, proj, [Ray((1,)), Ray((-1,))], schedule=(25, 50, 100))
    assert out["verdict"] == "Fredholm-consistent"
    assert not out["certified"]
    assert out["supInverseNormEstimate"] <= 1.0 + 1e-9
    assert out["caveat"] == FAMILY_CAVEAT


def test_fredholm_detects_spectrum_through_zero(z1):
    # compressed shift minus identity: the limit toward the subspace interior
    # is V - 1 whose spectrum circles through 0
    proj = SubspaceProjection(z1, HalfspacePredicate((1,), 0))
    A = shift_operator(z1, (1,)) - identity(z1)
    out = fredholm_test(A, proj, [Ray((1,)), Ray((-1,))],
                        schedule=(25, 50, 100, 200))
    assert out["verdict"] == "notFredholm"
    assert out["certified"]
    assert out["witnessSequence"]
    assert out["witnessMargin"] < 0.05


def test_fredholm_divergent_sequence_inconclusive(z1):
    A = laplacian_stencil(z1) + multiplication(z1, SeededRandomField(1))
    proj = SubspaceProjection(z1, HalfspacePredicate((1,), 0))
    out = fredholm_test(A, proj, [Ray((1,))], schedule=(10, 20, 40),
                        budget=2 ** 12)
    assert out["verdict"] == "inconclusive"
    assert out["divergences"]


def test_ess_norm_bounds_nested(z1):
    A = laplacian_stencil(z1)
    proj = SubspaceProjection(z1, HalfspacePredicate((1,), 0))
    out = ess_norm_estimate(A, proj, [Ray((1,)), Ray((-1,))])
    assert out["lower"] <= out["upper"] + 1e-12
    assert out["upper"] <= 2.0 + 1e-9
    assert out["lower"] >= 1.9  # window-100 view of the true value 2


def test_essential_spectrum_symbol_route(z1):
    A = laplacian_stencil(z1)
    out = essential_spectrum_estimate(A, None, [Ray((1,)), Ray((-1,))],
                                      method="symbolOracle")
    assert out["estimates"]
    ref = np.linspace(-2, 2, 801).astype(complex)
    assert hausdorff_distance(out["unionCloud"], ref) <= 0.01
    assert out["caveat"] == FAMILY_CAVEAT
    assert out["divergences"] == []
    assert out["params"]["method"] == "symbolOracle"


def test_hausdorff_distance_basics():
    a = np.array([0 + 0j, 1 + 0j])
    b = np.array([0 + 0j, 1 + 0j, 1 + 1j])
    assert hausdorff_distance(a, a) == 0.0
    assert np.isclose(hausdorff_distance(a, b), 1.0)
    assert np.isclose(hausdorff_distance(b, a), 1.0)
    assert hausdorff_distance(np.empty(0), a) == np.inf
    assert hausdorff_distance(np.empty(0), np.empty(0)) == 0.0
