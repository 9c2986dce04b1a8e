"""Randomized invariant suites for the flow and torus operations.

Each check runs a fixed number of seeded trials and reports the worst error
observed together with its tolerance; the CLI ``props`` command exposes them
as a JSON report and the acceptance tests call them directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import halfplane as hp
from . import torus as tt


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst_error: float
    tolerance: float
    trials: int
    detail: str = ""

    def as_dict(self):
        out = {
            "pass": self.passed,
            "worst_error": self.worst_error,
            "tolerance": self.tolerance,
            "trials": self.trials,
        }
        if self.detail:
            out["detail"] = self.detail
        return out


def _rng(seed):
    return np.random.default_rng(seed)


def _random_point(rng) -> hp.HalfPlanePoint:
    return hp.HalfPlanePoint(rng.uniform(-2.0, 2.0), math.exp(rng.uniform(-1.5, 1.5)))


def _random_torus(rng) -> tt.TorusPoint:
    return tt.TorusPoint(_random_point(rng))


def _random_slope(rng) -> tt.TorusFoliation:
    while True:
        p, q = rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)
        if abs(p) + abs(q) > 0.1:
            return tt.TorusFoliation(p, q)


def _result(name, worst, tol, trials, detail=""):
    return CheckResult(name, worst <= tol, worst, tol, trials, detail)


# -- half-plane flow identities ------------------------------------------------


def check_ray_additivity(trials=1000, seed=0):
    rng = _rng(seed)
    worst = 0.0
    for _ in range(trials):
        z = _random_point(rng)
        s, t = rng.uniform(-2, 2), rng.uniform(-2, 2)
        a = hp.ray_flow(hp.ray_flow(z, s), t)
        b = hp.ray_flow(z, s + t)
        worst = max(worst, abs(a.re - b.re), abs(a.im - b.im))
    return _result("ray_additivity", worst, 1e-12, trials)


def check_horo_additivity(trials=1000, seed=0):
    rng = _rng(seed)
    worst = 0.0
    for _ in range(trials):
        z = _random_point(rng)
        frame = hp.DiscDirectionFrame(hp.ORIGIN, math.exp(rng.uniform(-1, 1)))
        s, t = rng.uniform(-3, 3), rng.uniform(-3, 3)
        a = hp.horo_flow(hp.horo_flow(z, s, frame), t, frame)
        b = hp.horo_flow(z, s + t, frame)
        worst = max(worst, abs(a.re - b.re), abs(a.im - b.im))
    return _result("horo_additivity", worst, 1e-12, trials)


def check_flow_commutation(trials=1000, seed=0):
    rng = _rng(seed)
    worst = 0.0
    for _ in range(trials):
        z = _random_point(rng)
        frame = hp.DiscDirectionFrame(hp.ORIGIN, math.exp(rng.uniform(-1, 1)))
        s, t = rng.uniform(-2, 2), rng.uniform(-2, 2)
        a = hp.ray_flow(hp.horo_flow(z, s, frame), t)
        b = hp.horo_flow(hp.ray_flow(z, t), s, frame)
        worst = max(worst, abs(a.re - b.re), abs(a.im - b.im))
    return _result("flow_commutation", worst, 1e-12, trials)


def check_ext_profile(trials=500, seed=0):
    """Ext decays like e^{-t} along the ray and is constant along the horocycle."""
    rng = _rng(seed)
    worst = 0.0
    for _ in range(trials):
        ext0 = math.exp(rng.uniform(-1, 1))
        frame = hp.DiscDirectionFrame(hp.ORIGIN, ext0)
        t = rng.uniform(-2, 2)
        s = rng.uniform(-3, 3)
        along_ray = frame.ext_at(hp.ray_flow(hp.ORIGIN, t))
        worst = max(worst, abs(along_ray - ext0 * math.exp(-t)))
        z = _random_point(rng)
        moved = hp.horo_flow(z, s, frame)
        worst = max(worst, abs(frame.ext_at(moved) - frame.ext_at(z)))
    return _result("ext_profile", worst, 1e-12, trials)


def check_distance_identity(trials=3, seed=0):
    worst = 0.0
    for u in (0.1, 1.0, 10.0):
        d = hp.hyp_distance(hp.ORIGIN, hp.HalfPlanePoint(-u, 1.0))
        worst = max(worst, abs(d - 2.0 * math.asinh(u / 2.0)))
    return _result("distance_identity", worst, 1e-12, 3)


def check_polar_parity(trials=200, seed=0):
    """k is even in t; theta carries the sign of t."""
    rng = _rng(seed)
    worst = 0.0
    ok = True
    for _ in range(trials):
        t = rng.uniform(0.01, 50.0)
        e0, ex = math.exp(rng.uniform(-1, 1)), math.exp(rng.uniform(-1, 1))
        plus = hp.horo_polar(t, e0, ex)
        minus = hp.horo_polar(-t, e0, ex)
        worst = max(worst, abs(plus.k - minus.k))
        ok = ok and plus.theta > 0.0 and minus.theta < 0.0
    res = _result("polar_parity", worst, 1e-12, trials)
    res.passed = res.passed and ok
    return res


def check_displacement_consistency(trials=None, seed=0):
    """Definition vs half-plane displacement on the log-spaced acceptance grid."""
    worst = 0.0
    count = 0
    for t in np.geomspace(1e-3, 1e3, 25):
        for e0 in (0.25, 1.0, 4.0):
            for ex in (0.25, 1.0, 4.0):
                worst = max(worst, hp.horo_displacement_consistency(float(t), e0, ex))
                count += 1
    return _result("displacement_consistency", worst, 1e-12, count)


# -- torus model ---------------------------------------------------------------


def check_kerckhoff_agreement(trials=100, seed=0, depth=12):
    """Enumerated Kerckhoff sup vs the isometric disc-model distance, d < 3."""
    rng = _rng(seed)
    worst = 0.0
    done = 0
    while done < trials:
        x, y = _random_torus(rng), _random_torus(rng)
        d = hp.hyp_distance(x.tau, y.tau)
        if d >= 3.0 or d < 1e-3:
            continue
        worst = max(worst, abs(tt.kerckhoff_distance(x, y, depth) - d))
        done += 1
    return _result("kerckhoff_agreement", worst, 1e-6, trials)


def check_ray_scaling(trials=100, seed=0):
    """e^t Ext along the ray stays constant (the defining contraction)."""
    rng = _rng(seed)
    worst = 0.0
    for _ in range(trials):
        x, f = _random_torus(rng), _random_slope(rng)
        base_val = tt.ext_length(x, f)
        t = rng.uniform(-2.0, 2.0)
        moved = tt.ext_length(tt.ray_point(x, f, t), f) * math.exp(t)
        worst = max(worst, abs(moved - base_val) / max(base_val, 1.0))
    return _result("ray_scaling", worst, 1e-12, trials)


def check_horo_invariance(trials=100, seed=0):
    rng = _rng(seed)
    base = tt.BASE_POINT
    worst = 0.0
    for _ in range(trials):
        x, f = _random_torus(rng), _random_slope(rng)
        ref = tt.ext_length(x, f)
        s = rng.uniform(-5.0, 5.0)
        moved = tt.ext_length(tt.horo_point(x, base, f, s), f)
        worst = max(worst, abs(moved - ref) / max(ref, 1.0))
    return _result("horo_invariance", worst, 1e-12, trials)


def check_torus_commutation(trials=1000, seed=0):
    rng = _rng(seed)
    base = tt.BASE_POINT
    worst = 0.0
    for _ in range(trials):
        x, f = _random_torus(rng), _random_slope(rng)
        s, t = rng.uniform(-2, 2), rng.uniform(-2, 2)
        a = tt.ray_point(tt.horo_point(x, base, f, s), f, t).as_complex()
        b = tt.horo_point(tt.ray_point(x, f, t), base, f, s).as_complex()
        worst = max(worst, abs(a - b))
    return _result("torus_commutation", worst, 1e-10, trials)


def check_torus_horo_additivity(trials=1000, seed=0):
    rng = _rng(seed)
    base = tt.BASE_POINT
    worst = 0.0
    for _ in range(trials):
        x, f = _random_torus(rng), _random_slope(rng)
        s, t = rng.uniform(-3, 3), rng.uniform(-3, 3)
        a = tt.horo_point(tt.horo_point(x, base, f, t), base, f, s).as_complex()
        b = tt.horo_point(x, base, f, s + t).as_complex()
        worst = max(worst, abs(a - b))
    return _result("torus_horo_additivity", worst, 1e-10, trials)


def check_twist_equivariance(trials=200, seed=0):
    """Ext at the twisted point of the transported curve matches exactly."""
    rng = _rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = _random_torus(rng)
        p, q = int(rng.integers(-3, 4)), int(rng.integers(-3, 4))
        if math.gcd(p, q) != 1:
            continue
        n = int(rng.integers(-4, 5))
        tw = tt.dehn_twist(tt.TorusFoliation(float(p), float(q)), n)
        g = _random_slope(rng)
        lhs = tt.ext_length(tw.apply_to_point(x), g)
        rhs = tt.ext_length(x, tw.curve_map(g))
        worst = max(worst, abs(lhs - rhs) / max(rhs, 1.0))
        fwd = tt.ext_length(tw.apply_to_point(x), tw.curve_forward(g))
        worst = max(worst, abs(fwd - tt.ext_length(x, g)) / max(1.0, fwd))
    return _result("twist_equivariance", worst, 1e-10, trials)


def check_horo_matches_twist(trials=100, seed=0):
    """Integer horocyclic time equals the twist action when Ext_base = 1."""
    rng = _rng(seed)
    base = tt.BASE_POINT
    worst = 0.0
    for _ in range(trials):
        x = _random_torus(rng)
        f = tt.TorusFoliation(1.0, 0.0) if rng.uniform() < 0.5 else tt.TorusFoliation(0.0, 1.0)
        n = int(rng.integers(-3, 4))
        a = tt.horo_point(x, base, f, float(n)).as_complex()
        b = tt.dehn_twist(f, n).apply_to_point(x).as_complex()
        worst = max(worst, abs(a - b))
    return _result("horo_matches_twist", worst, 1e-10, trials)


def check_horo_connect_roundtrip(trials=100, seed=0):
    rng = _rng(seed)
    worst = 0.0
    for _ in range(trials):
        x, y = _random_torus(rng), _random_torus(rng)
        if abs(x.as_complex() - y.as_complex()) < 1e-6:
            continue
        f, s = tt.horo_connect(x, y)
        back = tt.horo_point(x, tt.BASE_POINT, f, s).as_complex()
        worst = max(worst, abs(back - y.as_complex()))
    return _result("horo_connect_roundtrip", worst, 1e-9, trials)


def check_direction_continuity(trials=40, seed=0):
    """horo_point is Lipschitz-like in the slope on a compact neighbourhood."""
    rng = _rng(seed)
    base = tt.BASE_POINT
    worst_ratio = 0.0
    for _ in range(trials):
        x = _random_torus(rng)
        f = _random_slope(rng)
        s = rng.uniform(-2, 2)
        ref = tt.horo_point(x, base, f, s).as_complex()
        for eps in (1e-3, 1e-5):
            fd = tt.TorusFoliation(f.p + eps, f.q - 0.5 * eps)
            moved = tt.horo_point(x, base, fd, s).as_complex()
            worst_ratio = max(worst_ratio, abs(moved - ref) / eps)
    passed = worst_ratio < 1e3  # bounded difference quotient = no jumps
    return CheckResult("direction_continuity", passed, worst_ratio, 1e3, trials,
                       "worst |dx|/|df| difference quotient")


def check_gm_pairing_lemma(trials=None, seed=0, n=10000):
    """Sequences at vanishing distance share their boundary functional limit."""
    base = tt.BASE_POINT
    sample = tt.default_sample(20)
    f = tt.TorusFoliation(1.0, 0.0)
    y = tt.horo_point(base, base, f, float(n))
    z = tt.ray_point(y, tt.TorusFoliation(1.0, 1.0), 1.0 / n)  # d_T(y, z) -> 0
    d = tt.projective_distance(
        tt.gm_vector(y, base, sample), tt.gm_vector(z, base, sample)
    )
    return _result("gm_pairing_lemma", d, 1e-3, 1, f"at n = {n}")


def question1_experiment(n_values=None, sample_size=20, depth=12):
    """Same-rate sequences, same boundary limit, distance bounded away from 0.

    y_n is the horocyclic orbit of the horizontal curve, z_n the geodesic ray
    at the matching polar distance.  Reports the first n with d(y, z) >= 1
    and the largest-n diagnostics.
    """
    base = tt.BASE_POINT
    f = tt.TorusFoliation(1.0, 0.0)
    sample = tt.default_sample(sample_size)
    target = tt.intersection_vector(f, sample)
    if n_values is None:
        n_values = sorted(set(list(range(1, 33)) + [64, 128, 256, 512, 1024, 4096, 10000]))
    n0 = None
    min_dist_after = math.inf
    rows = []
    for n in n_values:
        y = tt.horo_point(base, base, f, float(n))
        d_polar = hp.polar_travel_distance(float(n), 1.0, 1.0)
        z = tt.ray_point(base, f, d_polar)
        d_y = tt.kerckhoff_distance(base, y, depth)
        ratio = d_y / d_polar
        dyz = hp.hyp_distance(y.tau, z.tau)
        if dyz >= 1.0 and n0 is None:
            n0 = n
        if n0 is not None:
            min_dist_after = min(min_dist_after, dyz)
        rows.append((n, ratio, dyz))
    n_last = n_values[-1]
    y = tt.horo_point(base, base, f, float(n_last))
    z = tt.ray_point(base, f, hp.polar_travel_distance(float(n_last), 1.0, 1.0))
    gm_gap = tt.projective_distance(
        tt.gm_vector(y, base, sample, depth), tt.gm_vector(z, base, sample, depth)
    )
    ray_gap = tt.projective_distance(tt.gm_vector(y, base, sample, depth), target)
    return {
        "n0": n0,
        "min_distance_from_n0": min_dist_after,
        "final_rate_ratio": rows[-1][1],
        "final_gm_gap": gm_gap,
        "final_gap_to_curve_functional": ray_gap,
        "rows": rows,
    }


def check_question1(trials=None, seed=0):
    rep = question1_experiment()
    ok = (
        rep["n0"] is not None
        and rep["min_distance_from_n0"] >= 1.0
        and abs(rep["final_rate_ratio"] - 1.0) <= 1e-3
        and rep["final_gm_gap"] <= 1e-3
    )
    worst = max(abs(rep["final_rate_ratio"] - 1.0), rep["final_gm_gap"])
    return CheckResult(
        "question1", ok, worst, 1e-3, len(rep["rows"]),
        f"n0 = {rep['n0']}, min d(y,z) beyond n0 = {rep['min_distance_from_n0']:.6f}",
    )


ALL_CHECKS = [
    check_ray_additivity,
    check_horo_additivity,
    check_flow_commutation,
    check_ext_profile,
    check_distance_identity,
    check_polar_parity,
    check_displacement_consistency,
    check_kerckhoff_agreement,
    check_ray_scaling,
    check_horo_invariance,
    check_torus_commutation,
    check_torus_horo_additivity,
    check_twist_equivariance,
    check_horo_matches_twist,
    check_horo_connect_roundtrip,
    check_direction_continuity,
    check_gm_pairing_lemma,
    check_question1,
]


def run_all(trials=None, seed=0):
    """Run every suite; per-check default trial counts unless overridden."""
    results = []
    for fn in ALL_CHECKS:
        if trials is None:
            results.append(fn(seed=seed))
        else:
            try:
                results.append(fn(trials=trials, seed=seed))
            except TypeError:
                results.append(fn(seed=seed))
    return results
