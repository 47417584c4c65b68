"""Independent oracles used by the test suite: refined-grid quadrature,
direct block-sum paraproducts, composite Simpson pairings, and the radial
shooting solve for the planar ground state.  Nothing here reuses the
production code paths it is meant to check."""

import numpy as np
from scipy.integrate import simpson, solve_ivp


def quad_grid(box, M):
    """Midpoint nodes and weight for a refined quadrature grid."""
    xs, ys = [], []
    x = box.origin[0] + (np.arange(M[0]) + 0.5) * box.sides[0] / M[0]
    y = box.origin[1] + (np.arange(M[1]) + 0.5) * box.sides[1] / M[1]
    w = box.sides[0] * box.sides[1] / (M[0] * M[1])
    return x, y, w


def quad_integral(f_samples, box, M):
    return float(np.sum(f_samples)) * box.sides[0] * box.sides[1] / (M[0] * M[1])


def direct_paraproduct_sums(u, v, P, J):
    """(lo, reso, hi) by literal double sums over block pairs on a padded
    grid; independent of the production running-sum evaluation."""
    from anderbox.calculus import apply_block
    from anderbox.geometry import GridField, forward_transform, inverse_transform, product_parity

    M = (2 * (u.trunc[0] + v.trunc[0]) + 4, 2 * (u.trunc[1] + v.trunc[1]) + 4)
    bu = {j: inverse_transform(apply_block(u, j, P), M).samples for j in range(-1, J + 1)}
    bv = {j: inverse_transform(apply_block(v, j, P), M).samples for j in range(-1, J + 1)}
    lo = np.zeros(M)
    reso = np.zeros(M)
    hi = np.zeros(M)
    for i in range(-1, J + 1):
        for j in range(-1, J + 1):
            prod = bu[i] * bv[j]
            if i <= j - 2:
                lo += prod
            elif abs(i - j) <= 1:
                reso += prod
            else:
                hi += prod
    pp = product_parity(u.parity, v.parity)
    N_out = (u.trunc[0] + v.trunc[0], u.trunc[1] + v.trunc[1])
    box = u.box
    out = []
    for g in (lo, reso, hi):
        out.append(forward_transform(GridField(box, g), pp, N_out))
    return tuple(out)


def simpson_pairing_1d(m, l, z, r, L, n_panels=None):
    """Composite-Simpson value of the 1d cosine-basis pairing."""
    def nu(k):
        return 2.0 ** (-0.5 * (k == 0))

    if n_panels is None:
        n_panels = 200 + 40 * int(max(m * r / L, l))
    x = np.linspace(0.0, r, 2 * n_panels + 1)
    f = (nu(m) * np.sqrt(2.0 / L) * np.cos(np.pi * m * (x + z) / L)
         * nu(l) * np.sqrt(2.0 / r) * np.cos(np.pi * l * x / r))
    return float(simpson(f, x=x))


def shooting_ground_state():
    """Radial ground state of Lap Q - Q + Q^3 = 0: returns
    (Q(0), |Q|_2^2, best constant 2/|Q|_2^2); validates both Pohozaev
    identities to 1e-6 before returning."""

    def integrate(q0, r_max=30.0):
        def rhs(r, y):
            Q, Pv = y
            return [Pv, Q - Q**3 - (Pv / r if r > 0 else 0.0)]

        r0 = 1e-6
        y0 = [q0 + (q0 - q0**3) * r0**2 / 4, (q0 - q0**3) * r0 / 2]
        hit_zero = lambda r, y: y[0]
        hit_zero.terminal = True
        hit_zero.direction = -1
        turn_up = lambda r, y: y[1]
        turn_up.terminal = True
        turn_up.direction = 1
        sol = solve_ivp(rhs, (r0, r_max), y0, events=[hit_zero, turn_up],
                        rtol=1e-12, atol=1e-14, dense_output=True, max_step=0.05)
        return sol, len(sol.t_events[0]) > 0

    lo, hi = 1.0, 4.0
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        _, crossed = integrate(mid)
        if crossed:
            hi = mid
        else:
            lo = mid
    q0 = 0.5 * (lo + hi)
    sol, _ = integrate(q0)
    rr = np.linspace(1e-6, min(sol.t[-1], 14.0), 40001)
    Q = sol.sol(rr)[0]
    l2 = 2 * np.pi * np.trapezoid(Q**2 * rr, rr)
    grad = 2 * np.pi * np.trapezoid(np.gradient(Q, rr) ** 2 * rr, rr)
    l4 = 2 * np.pi * np.trapezoid(Q**4 * rr, rr)
    assert abs(grad / l2 - 1.0) < 1e-6, "Pohozaev identity |grad Q|^2 = |Q|^2 failed"
    assert abs(l4 / (2 * l2) - 1.0) < 1e-6, "Pohozaev identity |Q|_4^4 = 2 |Q|^2 failed"
    return q0, l2, 2.0 / l2


def ims_fd_residual(psi, ims, k, h=3e-4, Mg=120, margin=0.3):
    """L2 norm of the localization identity residual

        eta_k^2 Lap psi + Lap(eta_k^2 psi) - 2 eta_k Lap(eta_k psi)
            - 2 psi |grad eta_k|^2

    with the Laplacians of the products evaluated by 4th-order finite
    differences (independent of the spectral machinery)."""
    from anderbox.calculus import laplacian

    lo0 = ims.r * k[0] - ims.a - margin
    lo1 = ims.r * k[1] - ims.a - margin
    side = ims.r + ims.a + 2 * margin
    xg = lo0 + (np.arange(Mg) + 0.5) * side / Mg
    yg = lo1 + (np.arange(Mg) + 0.5) * side / Mg

    def eta2d(xv, yv):
        return np.outer(ims.eta_1d(xv - ims.r * k[0]), ims.eta_1d(yv - ims.r * k[1]))

    def sample(fn, xv, yv):
        X = np.stack(np.meshgrid(xv, yv, indexing="ij"), axis=-1)
        return fn(X)

    psi_at = lambda X: psi.eval(X)

    def g1(xv, yv):
        return eta2d(xv, yv) ** 2 * sample(psi_at, xv, yv)

    def g2(xv, yv):
        return eta2d(xv, yv) * sample(psi_at, xv, yv)

    coef = [-1.0, 16.0, -30.0, 16.0, -1.0]
    offs = [-2, -1, 0, 1, 2]

    def fd_lap(g):
        out = np.zeros((Mg, Mg))
        for c, o in zip(coef, offs):
            out += c * g(xg + o * h, yg)
            out += c * g(xg, yg + o * h)
        return out / (12 * h * h)

    eta = eta2d(xg, yg)
    d1 = ims.eta_1d_deriv(xg - ims.r * k[0])
    e1 = ims.eta_1d(xg - ims.r * k[0])
    d2 = ims.eta_1d_deriv(yg - ims.r * k[1])
    e2 = ims.eta_1d(yg - ims.r * k[1])
    gsq = np.outer(d1**2, e2**2) + np.outer(e1**2, d2**2)
    psig = sample(psi_at, xg, yg)
    lap_psi = sample(lambda X: laplacian(psi).eval(X), xg, yg)
    res = eta**2 * lap_psi + fd_lap(g1) - 2 * eta * fd_lap(g2) - 2 * psig * gsq
    return float(np.sqrt(np.sum(res**2) * (side * side / Mg**2)))
