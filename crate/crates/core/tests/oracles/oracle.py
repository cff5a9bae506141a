"""Independent reference values for the frozen fixtures in the Rust tests.

Evaluated with numpy/scipy, sharing no code with the crate. Run:

    python3 crates/core/tests/oracles/oracle.py
"""
import numpy as np
from scipy import integrate, special

RHO0, C0 = 1.21, 343.0
ETA, GAMMA, P0, PR = 1.81e-5, 1.41, 101325.0, 0.71

PET = dict(sigma=4683.0, phi=0.90, ainf=1.00, lam=362.1e-6, lamp=362.2e-6, d=0.050)
MEL = dict(sigma=12200.0, phi=0.98, ainf=1.01, lam=115e-6, lamp=116e-6, d=0.0337)


def jca(m, w):
    s, phi, a, L, Lp = m["sigma"], m["phi"], m["ainf"], m["lam"], m["lamp"]
    rho = RHO0 * a * (1 + s * phi / (1j * w * RHO0 * a)
                      * np.sqrt(1 + 4j * a**2 * ETA * RHO0 * w / (s**2 * L**2 * phi**2)))
    inner = 1 + 8 * ETA / (1j * w * PR * RHO0 * Lp**2) * np.sqrt(1 + 1j * w * RHO0 * PR * Lp**2 / (16 * ETA))
    kap = GAMMA * P0 / (GAMMA - (GAMMA - 1) / inner)
    kp = w * np.sqrt(rho / kap)
    zp = np.sqrt(kap * rho)
    return rho, kap, kp, zp


def zs_layer(m, f):
    w = 2 * np.pi * f
    _, _, kp, zp = jca(m, w)
    return -1j * zp * np.cos(kp * m["d"]) / np.sin(kp * m["d"])


def helmholtz(m, f, t=0.006, wslot=0.008, th=0.126):
    w = 2 * np.pi * f
    x = wslot * np.sqrt(RHO0 * w / (4 * ETA)) * np.sqrt(1j)
    zh = 1j * w * RHO0 * t / th / (1 - np.tanh(x) / x) + 4 * np.sqrt(2 * RHO0 * ETA * w) / th
    F = 1 - 1.25 * th
    psi = 1j * 0.936 * w * RHO0 * wslot * F / 2 * np.log(np.sin(np.pi * th)) / th
    return zh - psi + zs_layer(m, f)


def sommerfeld(m, src, rec, f, kmax=20.0):
    w = 2 * np.pi * f
    k0 = w / C0
    rho, _, kp, _ = jca(m, w)
    r = np.hypot(src[0] - rec[0], src[1] - rec[1])
    h = src[2] + rec[2]
    d = m["d"]

    def nu(x2):
        return np.sqrt(x2 + 0j) if x2 >= 0 else 1j * np.sqrt(-x2)

    def integrand(kap, which, part):
        k = kap * k0
        n0 = nu(k * k - k0 * k0)
        n1 = np.sqrt(k * k - kp * kp)
        base = 2 * rho * np.exp(-n0 * h) / (n0 * rho + n1 * RHO0 * np.tanh(n1 * d)) * k * special.j0(k * r) * k0
        if which == "uz":
            base = base * (-n0)
        return base.real if part == 0 else base.imag

    # dense candidate grid (x10 the crate's default cluster density)
    pts = [1.0, abs(kp) / k0]
    grid = []
    for c in pts:
        for i in range(500):
            off = 0.05 * 2.0 ** (-i / 10.0)
            grid += [c - off, c + off]
        grid.append(c)
    grid = sorted(g for g in set(grid) if 0 < g < kmax)
    out = {}
    for which in ("p", "uz"):
        vals = []
        for part in (0, 1):
            # split into chunks because quad caps the number of break points
            edges = [0.0] + grid + [kmax]
            acc = 0.0
            for a, b in zip(edges[:-1], edges[1:]):
                v, _ = integrate.quad(integrand, a, b, args=(which, part), limit=400, epsabs=0, epsrel=1e-13)
                acc += v
            vals.append(acc)
        out[which] = vals[0] + 1j * vals[1]
    r1 = np.linalg.norm(np.subtract(src, rec))
    r2 = np.linalg.norm(np.subtract([src[0], src[1], -src[2]], rec))
    g1 = np.exp(-1j * k0 * r1) / r1
    g2 = np.exp(-1j * k0 * r2) / r2
    p = g1 - g2 + out["p"]
    dz1 = -(rec[2] - src[2]) * (1j * k0 * r1 + 1) * np.exp(-1j * k0 * r1) / r1**3
    dz2 = -(rec[2] + src[2]) * (1j * k0 * r2 + 1) * np.exp(-1j * k0 * r2) / r2**3
    dpdz = dz1 - dz2 + out["uz"]
    uz = -dpdz / (1j * k0 * RHO0 * C0)
    return p, uz


def show(name, z):
    print(f"{name}: ({z.real:.16e}, {z.imag:.16e})")


if __name__ == "__main__":
    for label, m, f in (("PET 1k", PET, 1000.0), ("MEL 500", MEL, 500.0)):
        _, _, kp, zp = jca(m, 2 * np.pi * f)
        show(label + " kp", kp)
        show(label + " zp", zp)
    show("PET 1k Zs", zs_layer(PET, 1000.0))
    show("Helmholtz PET 630", helmholtz(PET, 630.0))
    mel10 = dict(MEL, sigma=MEL["sigma"] * 10)
    print("MEL |Zs| 100Hz", abs(zs_layer(MEL, 100.0)), "x10 sigma", abs(zs_layer(mel10, 100.0)))
    p, uz = sommerfeld(PET, (0, 0, 1.05), (0, 0, 0.013), 1000.0)
    show("sommerfeld p PET 1k (0,0,0.013)", p)
    show("sommerfeld uz PET 1k (0,0,0.013)", uz)
    p, uz = sommerfeld(PET, (0, 0, 1.05), (0.1, -0.2, 0.042), 250.0)
    show("sommerfeld p PET 250 (0.1,-0.2,0.042)", p)
    show("sommerfeld uz PET 250 (0.1,-0.2,0.042)", uz)
    p, uz = sommerfeld(PET, (0, 0, 1.05), (0, 0, 0.0), 500.0)
    show("sommerfeld p PET 500 origin", p)
    show("sommerfeld uz PET 500 origin", uz)
