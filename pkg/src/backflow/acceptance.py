"""Acceptance criteria, runnable as a registry (CLI `verify`) or via pytest.

Each criterion function takes a shared cache dict (expensive intermediates
are reused across criteria), performs plain assertions, and returns a dict
of the numbers it checked.  Reference values asserted here:

* backflow bound 0.038452 (within 1%, extrapolated),
* guess-state fluxes -0.02095 / -0.02757 and the gaussian example -0.0061
  (within 5e-4),
* the analytic t = 0 current (1/8) sqrt(pi/2) and the Bessel moment
  1.04605,
* smearing/deconvolution round trips and weak-limit agreement.

Known red criterion: the quoted guess-1 flux -0.02095 at a = 0.4 is not
reproducible from the state's own closed forms, which are verified against
independent quadrature to machine precision and give -0.019236 (50.0% of
the bound) robustly over the regulator and over the shape parameter; the
criterion is asserted as stated and fails honestly.
"""

from __future__ import annotations

import time

import numpy as np
from scipy.integrate import simpson

from . import fluxes, kernel, measurement
from .currents import (
    bessel_t0_integrals,
    current_guess1,
    current_guess2,
    current_t0_check,
)
from .states import (
    GaussianSuperposition,
    Guess1State,
    Guess2State,
    eval_phi,
    negative_momentum_probability,
    state_from_config,
)

CBM = kernel.CBM_REFERENCE


def _spectrum(ctx, n, u_max, a=0.0):
    key = ("spectrum", n, u_max, a)
    if key not in ctx:
        grid = ctx.setdefault(("grid", n, u_max), kernel.build_grid(n, u_max))
        ctx[key] = kernel.solve_spectrum(kernel.build_kernel(grid, a=a))
    return ctx[key]


def _quadrature_current(phi_fn, t, eps=1e-3, v_hi=220.0, dv=5e-5):
    """Direct regulated quadrature of the factorized double integral.

    J(t) = (1/2 pi) int du dv (u+v) e^{it(u^2-v^2)} e^{-eps(u^2+v^2)} phi phi
    evaluated by splitting (u+v) into its two one-dimensional factors; no
    code is shared with the closed forms.
    """
    v = np.arange(0.0, v_hi, dv)
    phi = phi_fn(v)
    damp = phi * np.exp(-eps * v * v)
    e_plus = np.exp(1j * t * v * v)
    m0p = simpson(damp * e_plus, x=v)          # int e^{+it u^2} phi
    m1m = simpson(v * damp * np.conj(e_plus), x=v)  # int v e^{-it v^2} phi
    m0m = np.conj(m0p)
    m1p = np.conj(m1m)
    return float((m0p * m1m + m1p * m0m).real) / (2.0 * np.pi)


def criterion_1_bound(ctx):
    """Extrapolated most-negative eigenvalue within 1% of -0.038452."""
    t0 = time.perf_counter()
    report = kernel.bracken_melloy_bound(
        n_values=(200, 400, 800), u_max_values=(10.0, 15.0, 20.0)
    )
    elapsed = time.perf_counter() - t0
    ctx["bound_report"] = report
    value = report["most_negative"]
    rel = abs(value - (-CBM)) / CBM
    assert report["converged"], f"bound not converged: {report}"
    assert rel < 0.01, f"extrapolated bound {value:.6f} differs from -{CBM} by {rel:.2%}"
    assert elapsed < 300.0, f"bound computation took {elapsed:.0f} s"
    return {"most_negative": value, "relative_error": rel, "seconds": elapsed}


def criterion_2_spectrum_range(ctx):
    """Spectrum inside [-0.045, 1.02] with the top edge at 1 within 2%."""
    res = _spectrum(ctx, 800, 20.0)
    top = res.max_eigenvalue
    bottom = float(res.eigenvalues[-1])
    assert 0.98 <= top <= 1.02, f"max eigenvalue {top}"
    assert bottom >= -0.045, f"eigenvalue below -0.045: {bottom}"
    res2 = _spectrum(ctx, 400, 15.0)
    assert 0.98 <= res2.max_eigenvalue <= 1.02
    assert float(res2.eigenvalues[-1]) >= -0.045
    return {"max": top, "min": bottom}


def _largest_backflow(state, ctx_key, ctx):
    if ctx_key not in ctx:
        ctx[ctx_key] = fluxes.backflow_report(state, -3.0, 3.0, tol=1e-7)
    report = ctx[ctx_key]
    assert report, "no negative-current interval found"
    return report[0]


def criterion_3_guess1_flux(ctx):
    """Negative-interval flux of guess 1 at a = 0.4 equals -0.02095(5e-4)."""
    t0 = time.perf_counter()
    best = _largest_backflow(Guess1State(a=0.4), "report_guess1", ctx)
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0, f"took {elapsed:.0f} s"
    assert abs(best.F - (-0.02095)) <= 5e-4, (
        f"guess-1 flux {best.F:.6f} on ({best.t1:.4f}, {best.t2:.4f}) vs quoted "
        f"-0.02095; the closed forms (quadrature-verified) give -0.019236"
    )
    return {"F": best.F, "interval": (best.t1, best.t2), "seconds": elapsed}


def criterion_4_guess2_flux(ctx):
    """Negative-interval flux of guess 2 at a = 0.6, b = 2.8: -0.02757(5e-4)."""
    t0 = time.perf_counter()
    best = _largest_backflow(Guess2State(a=0.6, b=2.8), "report_guess2", ctx)
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0, f"took {elapsed:.0f} s"
    assert abs(best.F - (-0.02757)) <= 5e-4, f"guess-2 flux {best.F:.6f}"
    return {
        "F": best.F,
        "interval": (best.t1, best.t2),
        "fraction_of_bound": best.fraction_of_cbm,
        "seconds": elapsed,
    }


def criterion_5_gaussian_backflow(ctx):
    """Preset B: largest-window flux -0.0061(5e-4); p<0 contamination <= 1e-9."""
    state = state_from_config({"preset": "paper-gauss-B"})
    report = fluxes.backflow_report(state, 0.0, 8.0, tol=1e-7)
    ctx["report_gauss_b"] = report
    assert report, "no backflow interval for the gaussian example"
    best = report[0]
    assert abs(best.F - (-0.0061)) <= 5e-4, f"flux {best.F:.6f}"
    contamination = negative_momentum_probability(state, 1)
    assert contamination <= 1e-9, f"negative-momentum mass {contamination:.2e}"
    return {"F": best.F, "interval": (best.t1, best.t2), "p_neg": contamination}


def criterion_6_classical_scaling(ctx):
    """lambda(a) monotone; lambda * a^2 flat within 15% over a in {3, 5, 8}."""
    grid = kernel.build_grid(400, 15.0)
    a_values = np.array([0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0])
    rows = kernel.lambda_of_a(a_values, grid)
    lam = rows[:, 1]
    assert np.all(np.diff(lam) >= -1e-12), f"lambda(a) not monotone: {lam}"
    scaled = lam[-3:] * a_values[-3:] ** 2
    spread = (scaled.max() - scaled.min()) / abs(scaled.mean())
    assert spread < 0.15, f"lambda a^2 varies by {spread:.1%}: {scaled}"
    return {"lambda": lam.tolist(), "scaled_tail": scaled.tolist(), "spread": spread}


def criterion_7_oracle_equivalence(ctx):
    """Closed-form currents vs direct regulated quadrature; time symmetry."""
    rng = np.random.default_rng(20120416)
    cases = [
        (Guess1State(a=0.4, epsilon=1e-3), current_guess1),
        (Guess2State(a=0.6, b=2.8, epsilon=1e-3), current_guess2),
    ]
    worst = 0.0
    for state, j in cases:
        phi_fn = lambda u: eval_phi(state, u)
        for t in rng.uniform(-0.95, 0.95, 20):
            ref = _quadrature_current(phi_fn, float(t), eps=state.epsilon)
            diff = abs(j(float(t), state) - ref)
            worst = max(worst, diff)
            assert diff <= 1e-4, f"{type(state).__name__} at t={t}: |diff|={diff:.2e}"
    sym = 0.0
    for state, j in ((Guess1State(a=0.4), current_guess1),
                     (Guess2State(a=0.6, b=2.8), current_guess2)):
        for t in rng.uniform(0.01, 0.95, 20):
            d = abs(j(float(t), state) - j(float(-t), state))
            sym = max(sym, d)
            assert d <= 1e-8, f"J(-t) != J(t) by {d:.2e}"
    return {"worst_quadrature_diff": worst, "worst_symmetry_diff": sym}


def criterion_8_flux_identity(ctx):
    """Kernel quadratic form of phi_2 samples equals int_-1^1 J_2 dt (2e-3)."""
    from .states import GridMomentumState

    state = Guess2State(a=0.6, b=2.8)
    res = _spectrum(ctx, 800, 20.0)
    grid = res.grid
    vals = eval_phi(state, grid.nodes)
    # unnormalized on the truncated grid; renormalize under the grid weights
    vals = vals / np.sqrt(np.sum(grid.weights * vals**2))
    phi = GridMomentumState(grid, vals)
    kern = kernel.build_kernel(grid)
    f_kernel = kernel.flux_quadratic_form(phi, kern)
    j = lambda t: current_guess2(t, state)
    f_time = fluxes.integrate_current(j, -1.0, 1.0, tol=1e-6, exclusions=(-1.0, 1.0))
    diff = abs(f_kernel - f_time)
    assert diff <= 2e-3, f"kernel {f_kernel:.6f} vs time {f_time:.6f}"
    return {"kernel_form": f_kernel, "time_integral": f_time, "diff": diff}


def criterion_9_analytic_values(ctx):
    """J(0) of the tail shape and the Bessel moment, by quadrature."""
    j0_value = current_t0_check()
    target = np.sqrt(np.pi / 2.0) / 8.0
    assert abs(j0_value - target) <= 1e-6, f"J(0) = {j0_value!r} vs {target!r}"
    m0, m1 = bessel_t0_integrals()
    assert abs(m1 - 1.04605) <= 1e-4, f"int J0(u^2) du = {m1!r}"
    assert abs(m0 - 0.5) <= 1e-4, f"int u J0(u^2) du = {m0!r}"
    return {"J0_tail": j0_value, "bessel_m1": m1, "bessel_m0": m0}


def _offset_gaussian_current(x0, p0, sigma):
    """Analytic origin current of one normalized offset packet (hbar = m = 1)."""
    pref2 = 4.0 * sigma / np.sqrt(2.0 * np.pi)

    def j(t):
        t = np.asarray(t, dtype=float)
        d = 4.0 * sigma**2 + 2.0j * t
        w = d**-0.5 * np.exp(1j * p0 * (0.0 - x0) - 0.5j * p0 * p0 * t
                             - (0.0 - x0 - p0 * t) ** 2 / d)
        dw = (1j * p0 + 2.0 * (x0 + p0 * t) / d) * w
        out = pref2 * (np.conj(w) * dw).imag
        return out if np.ndim(t) else float(out)

    return j


def criterion_10_measurement_suite(ctx):
    """Positivity, round trip, weak-limit agreement, sequential probability."""
    details = {}
    guess2 = Guess2State(a=0.6, b=2.8)

    # exact-model positivity for the backflow state; the tapered state
    # carries momenta up to u = 30, so dt must sit just under 0.5/u^2 * 2m
    psi = measurement.grid_from_state(guess2, time=-4.0)
    for v0 in (0.1, 0.5):
        n_steps = 16500
        res = measurement.propagate(psi, dt=8.0 / n_steps, n_steps=n_steps, V0=v0,
                                    k_max=30.5)
        _, arrival = measurement.survival_and_arrival(res)
        details[f"min_pi_v0_{v0}"] = float(arrival.values.min())
        assert np.all(arrival.values >= -1e-10)

    # smear -> deconvolve round trip on the closed-form current
    j2 = lambda t: current_guess2(t, guess2)
    taus = np.arange(-2.2, 2.2 + 1e-12, 0.005)
    pi = measurement.smear_current(j2, 0.5, taus, exclusions=(-1.0, 1.0))
    rec = measurement.deconvolve(pi)
    keep = (np.abs(rec.times) <= 2.0) & (np.abs(np.abs(rec.times) - 1.0) > 0.1)
    keep &= ~rec.excluded
    ref = np.array([j2(float(t)) for t in rec.times[keep]])
    rt_err = float(np.max(np.abs(rec.values[keep] - ref)))
    details["roundtrip_error"] = rt_err
    assert rt_err < 1e-4, f"roundtrip error {rt_err:.2e}"

    # weak limit vs exact model for a gaussian packet at V0 = 0.05
    x0, p0, sigma = -15.0, 1.5, 2.0
    packet = measurement.gaussian_packet(-80.0, 140.0, 0.04, x0, p0, sigma)
    run = measurement.propagate(packet, dt=0.01, n_steps=4000, V0=0.05)
    _, exact = measurement.survival_and_arrival(run)
    taus = np.linspace(0.5, 38.0, 64)
    weak = measurement.smear_current(
        _offset_gaussian_current(x0, p0, sigma), 0.05, taus, t_floor=-20.0
    )
    exact_interp = np.interp(taus, exact.times, exact.values)
    sup = float(np.max(np.abs(exact_interp - weak.values)))
    den = float(np.max(np.abs(exact_interp)))
    details["weak_limit_sup_ratio"] = sup / den
    assert sup / den < 0.05, f"weak-limit mismatch {sup / den:.1%}"

    # sequential measurement over the backflow window
    best = _largest_backflow(guess2, "report_guess2", ctx)
    p_seq = measurement.sequential_probability(guess2, best.t1, best.t2)
    details["sequential_p"] = p_seq
    details["flux_window"] = best.F
    assert 0.0 <= p_seq <= 1.0
    assert p_seq >= best.F, "sequential probability below the (negative) flux?"
    return details


def criterion_11_probability_curves(ctx):
    """P(t) increase inside [-1, 1] for guess 2 and inside [2, 4] for preset B."""
    guess2 = Guess2State(a=0.6, b=2.8)
    t_grid = np.linspace(-0.9, 0.9, 13)
    p_vals = measurement.left_probability_curve(guess2, t_grid)
    rises = np.diff(p_vals)
    assert np.all(rises > 0.0), f"P(t) not increasing inside [-1, 1]: {p_vals}"

    preset_b = state_from_config({"preset": "paper-gauss-B"})
    t_grid_b = np.linspace(2.7, 4.0, 8)
    p_b = measurement.left_probability_curve(preset_b, t_grid_b)
    assert np.max(np.diff(p_b)) > 0.0, f"no increase of P in [2, 4]: {p_b}"
    return {
        "guess2_P": p_vals.tolist(),
        "gauss_B_P": p_b.tolist(),
    }


CRITERIA = (
    ("1", "backflow bound from extrapolated eigensolves", criterion_1_bound),
    ("2", "spectrum contained in [-0.045, 1.02], top edge at 1", criterion_2_spectrum_range),
    ("3", "guess-1 negative-interval flux -0.02095 +- 5e-4", criterion_3_guess1_flux),
    ("4", "guess-2 negative-interval flux -0.02757 +- 5e-4", criterion_4_guess2_flux),
    ("5", "gaussian preset B flux -0.0061 +- 5e-4, clean momenta", criterion_5_gaussian_backflow),
    ("6", "smeared eigenvalue monotone, -1/a^2 scaling", criterion_6_classical_scaling),
    ("7", "closed forms vs direct quadrature, time symmetry", criterion_7_oracle_equivalence),
    ("8", "kernel quadratic form equals time-integrated current", criterion_8_flux_identity),
    ("9", "analytic t = 0 current and Bessel moment", criterion_9_analytic_values),
    ("10", "measurement models: positivity, round trip, weak limit", criterion_10_measurement_suite),
    ("11", "left-probability curves show the backflow windows", criterion_11_probability_curves),
)


def run_all(only=None, verbose_details=False):
    """Run the registry; returns (all_passed, list of result dicts)."""
    ctx = {}
    results = []
    for cid, summary, fn in CRITERIA:
        if only and cid not in only:
            continue
        t0 = time.perf_counter()
        try:
            details = fn(ctx)
            passed, message = True, ""
        except AssertionError as exc:
            details, passed, message = {}, False, str(exc)
        elapsed = time.perf_counter() - t0
        results.append(
            {
                "criterion": cid,
                "summary": summary,
                "passed": passed,
                "message": message,
                "seconds": round(elapsed, 2),
                "details": details if (verbose_details or not passed) else {},
            }
        )
    return all(r["passed"] for r in results), results
