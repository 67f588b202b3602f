import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from denseleaf.densities import (
    FAMILIES,
    ConditionalDensity,
    ConditionalKind,
    DagKind,
    GridDensity1D,
    MixtureDensity,
    VineCopulaDensity,
    cdf_fk,
    eval_conditional,
    eval_joint,
    fgm_h,
    fgm_h_inverse,
    fgm_pair_density,
    inv_cdf_fk,
    make_expbm_density,
    make_linear_hj,
    make_model,
    marginal_fk,
    node_plan,
    parent_of,
    rho,
    sample,
    theta_for_edge,
)


def _rng(seed):
    return np.random.Generator(np.random.Philox(seed))


# ------------------------------------------------------------- 1-D building blocks


@pytest.mark.parametrize("with_rho", [False, True])
@pytest.mark.parametrize("seed", [0, 1, 17])
def test_expbm_invariants(seed, with_rho):
    g = make_expbm_density(seed, 4096, with_rho)
    step = g.support_hi / 4096
    assert abs(np.trapezoid(g.values, dx=step) - 1.0) < 1e-9
    assert g.cdf[0] == 0.0 and g.cdf[-1] == 1.0
    assert np.all(np.diff(g.cdf) >= 0)
    assert np.all(np.isfinite(g.values)) and g.values.min() >= 0
    assert g.support_hi == (0.75 if with_rho else 1.0)
    if with_rho:
        assert g.values[0] == 0.0


def test_expbm_determinism():
    a = make_expbm_density(42, 4096)
    b = make_expbm_density(42, 4096)
    assert a.values.tobytes() == b.values.tobytes()
    assert make_expbm_density(43, 4096).values.tobytes() != a.values.tobytes()


def test_expbm_is_exponential_of_gaussian_walk():
    # log-ratio of consecutive knots is an increment with variance equal to the grid step
    g = make_expbm_density(5, 4096)
    incr = np.diff(np.log(g.values))
    assert incr.var() == pytest.approx(1 / 4096, rel=0.1)
    assert stats.normaltest(incr).pvalue > 1e-3


def test_expbm_rejects_coarse_grid():
    with pytest.raises(ValueError):
        make_expbm_density(0, 32)


def test_rho():
    assert rho(0.0) == 0.0
    assert rho(0.75) == 0.0
    assert rho(0.9) == 0.0
    assert rho(0.375) == pytest.approx(0.25)


def test_grid_cdf_and_ppf():
    g = make_expbm_density(3, 256)
    x = np.linspace(0, 1, 1001)
    # cdf against independent adaptive integration of the pdf
    for t in (0.1, 0.37, 0.9):
        want = integrate.quad(g.pdf, 0, t, points=list(g.knots[g.knots < t]), limit=400)[0]
        assert g.cdf_at(t) == pytest.approx(want, abs=1e-10)
    u = g.cdf_at(x)
    np.testing.assert_allclose(g.cdf_at(g.ppf(u)), u, atol=1e-12)


def test_grid_from_values_errors():
    with pytest.raises(ValueError):
        GridDensity1D.from_values(1.0, [1.0])
    with pytest.raises(ValueError):
        GridDensity1D.from_values(1.0, [0.0, -1.0, 1.0])
    with pytest.raises(ValueError):
        GridDensity1D.from_values(1.0, [0.0, 0.0])


def test_grid_to_csv(tmp_path):
    g = make_expbm_density(3, 64)
    g.to_csv(tmp_path / "g.csv")
    arr = np.loadtxt(tmp_path / "g.csv", delimiter=",", skiprows=1)
    np.testing.assert_array_equal(arr[:, 1], g.values)


def test_linear_hj():
    assert make_linear_hj(4).pdf(0.0) == 1.25
    for d in (1, 2, 7):
        h = make_linear_hj(d)
        assert h.pdf(0.5) == 1.0
        assert integrate.quad(h.pdf, 0, 1)[0] == pytest.approx(1.0, abs=1e-13)
        u = np.linspace(0, 1, 101)
        np.testing.assert_allclose(h.cdf_at(h.ppf(u)), u, atol=1e-13)
        assert h.pdf(np.linspace(0, 1, 11)).min() >= 1 - 1 / d - 1e-15


# ----------------------------------------------------------------- conditionals


BASE = make_expbm_density(11)
RBASE = make_expbm_density(12, with_rho=True)
MIX = ConditionalDensity(ConditionalKind.MIXING, BASE)
SHIFT = ConditionalDensity(ConditionalKind.SHIFTING, RBASE)


@given(st.floats(0, 1))
def test_conditional_examples(x):
    assert eval_conditional(MIX, x, 1.0) == pytest.approx(float(BASE.pdf(x)), rel=1e-14)
    assert eval_conditional(MIX, x, 0.5) == pytest.approx(0.5 * float(BASE.pdf(x) + BASE.pdf(1 - x)), rel=1e-14)
    assert eval_conditional(SHIFT, x, 0.0) == pytest.approx(float(RBASE.pdf(x)), rel=1e-14)


def test_conditional_rejects_out_of_range():
    with pytest.raises(ValueError):
        eval_conditional(MIX, 1.1, 0.5)
    with pytest.raises(ValueError):
        eval_conditional(MIX, 0.5, -0.1)


def test_conditional_base_invariants():
    with pytest.raises(ValueError):
        ConditionalDensity(ConditionalKind.MIXING, RBASE)
    with pytest.raises(ValueError):
        ConditionalDensity(ConditionalKind.SHIFTING, BASE)
    nonzero_start = GridDensity1D.from_values(0.75, np.ones(65))
    with pytest.raises(ValueError):
        ConditionalDensity(ConditionalKind.SHIFTING, nonzero_start)


def test_shifting_integrates_to_one():
    xs = np.linspace(0, 1, 400_001)
    for p in _rng(0).random(100):
        mass = np.trapezoid(SHIFT.pdf(xs, p), xs)
        assert abs(mass - 1.0) < 1e-6


def test_mixing_integrates_to_one():
    xs = np.linspace(0, 1, 400_001)
    for p in (0.0, 0.3, 1.0):
        assert abs(np.trapezoid(MIX.pdf(xs, p), xs) - 1.0) < 1e-6


def test_mixing_child_given_parent_one_matches_base():
    """Literal check: two-sample 64-bin L1 below 0.02 at 10^5 draws each."""
    rng = _rng(0)
    a = MIX.sample(np.ones(100_000), rng)
    b = BASE.sample(100_000, rng)
    ha = np.histogram(a, 64, (0, 1))[0] / 1e5
    hb = np.histogram(b, 64, (0, 1))[0] / 1e5
    assert np.abs(ha - hb).sum() < 0.02


def test_mixing_child_given_parent_one_homogeneity():
    # chi-square homogeneity on the same 2 x 64 table; an oracle free of the L1 noise floor
    rng = _rng(0)
    a = np.histogram(MIX.sample(np.ones(100_000), rng), 64, (0, 1))[0]
    b = np.histogram(BASE.sample(100_000, rng), 64, (0, 1))[0]
    keep = (a + b) > 0
    assert stats.chi2_contingency(np.vstack([a[keep], b[keep]]))[1] > 1e-3


def test_shifting_support():
    z = SHIFT.sample(np.ones(50_000), _rng(1))
    assert z.min() >= 0.25 and z.max() <= 1.0


# ----------------------------------------------------------------------- DAGs


def test_parent_of():
    assert [parent_of(j, DagKind.NAIVE_BAYES) for j in range(2, 8)] == [1] * 6
    assert [parent_of(j, DagKind.BINARY_TREE) for j in range(2, 8)] == [1, 1, 2, 2, 3, 3]
    with pytest.raises(ValueError):
        parent_of(1, DagKind.BINARY_TREE)


def test_node_plan():
    assert node_plan("NBm", 4) == (ConditionalKind.MIXING, "expbm")
    assert node_plan("NBm", 2) == (ConditionalKind.MIXING, "linear")
    assert node_plan("NBs", 4) == (ConditionalKind.SHIFTING, "expbm_rho")
    assert node_plan("NBs", 3) == (ConditionalKind.MIXING, "linear")
    assert node_plan("NBs", 3, "literal") == (ConditionalKind.SHIFTING, "expbm_rho")
    assert node_plan("NBs", 4, "literal") == (ConditionalKind.MIXING, "expbm")
    with pytest.raises(ValueError):
        node_plan("NBm", 2, "other")


def test_nb_joint_factor_oracle():
    m = make_model({"family": "NBm", "d": 2, "seed": 4})
    root = make_expbm_density(_node_seed(4, 1))
    h2 = make_linear_hj(2)
    for x1, x2 in _rng(2).random((20, 2)):
        f1 = float(np.interp(x1, root.knots, root.values))
        f2 = x1 * float(h2.pdf(x2)) + (1 - x1) * float(h2.pdf(1 - x2))
        assert eval_joint(m, [x1, x2]) == pytest.approx(f1 * f2, rel=1e-12)


def _node_seed(seed, j):
    from denseleaf._rng import derive_seed

    return derive_seed(seed, "node", j)


@pytest.mark.parametrize("family", ["NBm", "NBs", "BTm", "BTs"])
def test_joint_nonnegative_and_sampled_in_cube(family):
    m = make_model({"family": family, "d": 5, "seed": 2})
    X = m.sample(5000, 3).points
    assert X.min() >= 0 and X.max() <= 1
    assert np.all(m.pdf(_rng(0).random((5000, 5))) >= 0)
    assert np.all(m.pdf(X) > 0)


def _cube_mass(model, per_axis):
    d = model.dim
    g = (np.arange(per_axis) + 0.5) / per_axis
    total = 0.0
    # slab over the first axis keeps memory bounded
    rest = np.stack(np.meshgrid(*([g] * (d - 1)), indexing="ij"), -1).reshape(-1, d - 1)
    for x1 in g:
        pts = np.column_stack([np.full(len(rest), x1), rest])
        total += model.pdf(pts).sum()
    return total / per_axis**d


@pytest.mark.parametrize("family,d,per_axis", [
    ("NBm", 2, 2048), ("NBs", 2, 2048), ("BTm", 2, 2048), ("BTs", 2, 2048),
    ("NBm", 3, 256), ("NBs", 3, 256), ("BTm", 3, 256), ("BTs", 3, 256), ("C", 3, 200),
])
def test_unit_mass(family, d, per_axis):
    m = make_model({"family": family, "d": d, "seed": 1})
    assert abs(_cube_mass(m, per_axis) - 1.0) < 0.005


def test_joint_histogram_goodness_of_fit():
    """Sampler and evaluator agree: chi-square on 16x16 cells of 2e5 draws, all DAG families."""
    e = np.linspace(0, 1, 17)
    for family in ("NBm", "NBs", "BTm", "BTs"):
        m = make_model({"family": family, "d": 2, "seed": 1})
        X = m.sample(200_000, 7).points
        obs = np.histogram2d(X[:, 0], X[:, 1], [e, e])[0].ravel()
        gx = (np.arange(16 * 128) + 0.5) / (16 * 128)  # 128 midpoints per cell axis
        G = np.stack(np.meshgrid(gx, gx, indexing="ij"), -1).reshape(-1, 2)
        dens = m.pdf(G).reshape(16, 128, 16, 128).mean(axis=(1, 3)).ravel() / 256
        exp = dens / dens.sum() * obs.sum()
        keep = exp > 5
        chi = ((obs[keep] - exp[keep]) ** 2 / exp[keep]).sum()
        assert stats.chi2.sf(chi, keep.sum() - 1) > 1e-4, family


def test_sample_api():
    m = make_model({"family": "BTm", "d": 3, "seed": 0})
    ds = sample(m, 10, 5)
    assert ds.n == 10 and ds.dim == 3 and ds.seed == 5 and ds.model_tag == "BTm"
    with pytest.raises(ValueError):
        sample(m, 0, 1)
    np.testing.assert_array_equal(sample(m, 10, 5).points, ds.points)


def test_eval_joint_dimension_mismatch():
    m = make_model({"family": "NBm", "d": 2})
    with pytest.raises(ValueError):
        eval_joint(m, [0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        eval_joint(m, [0.1, 1.2])


def test_make_model_from_json_and_errors():
    m = make_model('{"family": "NBs", "d": 3, "seed": 2}')
    assert m.dim == 3
    with pytest.raises(ValueError):
        make_model({"family": "XX", "d": 2})
    assert set(FAMILIES) == {"NBm", "NBs", "BTm", "BTs", "C", "mixture"}


def test_small_family_pairs_coincide_at_d2():
    # no node j=4 exists at d=2, so the shifting variants have nothing to shift
    a = make_model({"family": "NBm", "d": 2, "seed": 3})
    b = make_model({"family": "NBs", "d": 2, "seed": 3})
    X = _rng(0).random((100, 2))
    np.testing.assert_array_equal(a.pdf(X), b.pdf(X))


# ------------------------------------------------------------------ FGM / vine


def test_fgm_examples():
    assert fgm_pair_density(0.5, 0.3, 0.7) == 1.0
    assert fgm_pair_density(0, 0, 1) == 2.0
    assert fgm_pair_density(0, 1, 1) == 0.0
    with pytest.raises(ValueError):
        fgm_pair_density(0.2, 0.2, 1.5)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(-1, 1))
def test_fgm_h_inverse(w, u, theta):
    v = fgm_h_inverse(w, u, theta)
    assert 0 <= v <= 1
    assert float(fgm_h(v, u, theta)) == pytest.approx(w, abs=1e-12)


def test_fgm_h_is_conditional_cdf():
    for u, v, th in [(0.2, 0.7, 0.9), (0.8, 0.1, -1.0)]:
        want = integrate.quad(lambda t: fgm_pair_density(u, t, th), 0, v)[0]
        assert float(fgm_h(v, u, th)) == pytest.approx(want, abs=1e-13)


def test_theta_schedule():
    assert theta_for_edge(1, 4) == -1.0
    assert theta_for_edge(2, 4) == 0.01
    assert theta_for_edge(3, 4) == 1.0
    assert theta_for_edge(2, 3) == 1.0
    with pytest.raises(ValueError):
        theta_for_edge(1, 2)
    with pytest.raises(ValueError):
        theta_for_edge(4, 4)
    v = VineCopulaDensity.default(6)
    assert v.thetas == tuple(theta_for_edge(i, 6) for i in range(1, 6))


def test_marginal_fk_examples():
    for d in (3, 4, 9):
        assert marginal_fk(0.0, d) == pytest.approx(1.0, abs=1e-15)
    assert marginal_fk(0.25, 4) == 1.125
    with pytest.raises(ValueError):
        marginal_fk(1.5, 4)


@pytest.mark.parametrize("d", [3, 4, 8])
def test_fk_cdf(d):
    assert cdf_fk(0.0, d) == pytest.approx(0.0, abs=1e-15)
    assert cdf_fk(1.0, d) == pytest.approx(1.0, abs=1e-15)
    for t in (0.1, 0.25, 0.4, 0.6, 0.75, 0.95):
        want = integrate.quad(lambda s: marginal_fk(s, d), 0, t, points=[0.25, 0.5, 0.75])[0]
        assert float(cdf_fk(t, d)) == pytest.approx(want, abs=1e-12)
    x = np.linspace(0, 1, 2001)
    assert np.all(np.diff(cdf_fk(x, d)) > 0)
    np.testing.assert_allclose(inv_cdf_fk(cdf_fk(x, d), d), x, atol=1e-10)
    u = np.linspace(0, 1, 501)
    assert np.max(np.abs(cdf_fk(inv_cdf_fk(u, d), d) - u)) < 1e-12
    f = marginal_fk(x, d)
    assert f.min() >= 1 - 1 / d - 1e-15 and f.max() <= 1 + 1 / d + 1e-15


def test_vine_at_cdf_half_is_product_of_marginals():
    for d in (3, 5):
        v = VineCopulaDensity.default(d)
        x = np.full(d, float(inv_cdf_fk(np.array(0.5), d)))
        assert eval_joint(v, x) == pytest.approx(float(np.prod(marginal_fk(x, d))), rel=1e-9)


def test_fgm_step_theta_zero_independent():
    v = VineCopulaDensity(3, (0.0, 0.0))
    U = cdf_fk(v.sample(100_000, 9).points, 3)
    assert abs(np.corrcoef(U[:, 0], U[:, 1])[0, 1]) < 0.01
    assert stats.kstest(U[:, 1], "uniform").pvalue > 1e-3


def test_vine_marginals_from_samples():
    d = 4
    X = VineCopulaDensity.default(d).sample(100_000, 3).points
    e = np.linspace(0, 1, 33)
    p = np.diff(cdf_fk(e, d))
    for j in range(d):
        assert np.abs(np.histogram(X[:, j], e)[0] / 1e5 - p).sum() < 0.02


def test_vine_pdf_matches_pair_structure():
    v = VineCopulaDensity.default(4)
    x = _rng(3).random(4)
    U = cdf_fk(x, 4)
    want = np.prod(marginal_fk(x, 4)) * np.prod([fgm_pair_density(U[i], U[i + 1], v.thetas[i]) for i in range(3)])
    assert eval_joint(v, x) == pytest.approx(float(want), rel=1e-13)


def test_vine_errors():
    with pytest.raises(ValueError):
        VineCopulaDensity(2, (0.1,))
    with pytest.raises(ValueError):
        VineCopulaDensity(3, (0.1, 2.0))


# -------------------------------------------------------------------- mixtures


def test_mixture_weights_one_zero():
    a = make_model({"family": "NBm", "d": 3, "seed": 1})
    b = make_model({"family": "C", "d": 3})
    X = _rng(4).random((50, 3))
    np.testing.assert_array_equal(MixtureDensity((1.0, 0.0), (a, b)).pdf(X), a.pdf(X))


@given(st.floats(0, 1))
def test_mixture_affine(alpha):
    a = make_model({"family": "NBm", "d": 3, "seed": 1})
    b = make_model({"family": "C", "d": 3})
    X = _rng(5).random((20, 3))
    mix = MixtureDensity((alpha, 1 - alpha), (a, b))
    assert np.max(np.abs(mix.pdf(X) - (alpha * a.pdf(X) + (1 - alpha) * b.pdf(X)))) < 1e-12


def test_mixture_from_descriptor_and_sampling():
    m = make_model({"family": "mixture", "d": 3,
                    "components": [{"family": "NBm", "seed": 1}, {"family": "C"}]})
    assert m.weights == (0.5, 0.5)
    assert abs(_cube_mass(m, 120) - 1.0) < 0.005
    X = m.sample(2000, 1).points
    assert X.shape == (2000, 3)


def test_mixture_errors():
    a = make_model({"family": "NBm", "d": 3, "seed": 1})
    with pytest.raises(ValueError):
        MixtureDensity((0.5, 0.6), (a, a))
    with pytest.raises(ValueError):
        MixtureDensity((0.5, 0.5), (a, make_model({"family": "NBm", "d": 2})))
