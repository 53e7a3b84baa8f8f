"""Regenerate tests/oracle_values.json with 30-digit mpmath evaluations.

Independent of the package: every formula is re-derived here from scratch and
root solves use plain mpmath findroot/bisection. Run from the repository root:

    python tools/freeze_oracles.py
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 30


def b_root(gamma, a0):
    return mp.findroot(lambda b: b + 2 * gamma * mp.sinh(b / 2) - a0, (mp.mpf(0), mp.mpf(a0)), solver="anderson")


def boundary(N, R, gamma, a0, eps):
    b = b_root(gamma, a0)
    s, c, T = mp.sinh(b / 2), mp.cosh(b / 2), mp.tanh(b / 4)
    P = N * c**2 - 1
    c2 = 1 - (2 * N / R) * (c - 1) * eps
    uR2 = b + (2 * eps / R) * gamma * P * T / (gamma * c + 1)
    duR2 = 2 * s / eps - (2 / R) * P * T / (gamma * c + 1)
    vR2 = b + ((N - 1) / R) * eps * 2 * gamma * T / (gamma * c + 1)
    dvR2 = 2 * s / eps - ((N - 1) / R) * 2 * T / (gamma * c + 1)
    return dict(b=b, c2=c2, uR2=uR2, duR2=duR2, vR2=vR2, dvR2=dvR2)


def k_leading(N, R, b, p):
    X = mp.mpf(N - 1) / (2 * R)
    A = lambda k: (1 + X) * mp.log(mp.tanh(b / 4) / mp.tanh(k / 4)) + X / 2 * (mp.tanh(k / 4) ** 2 - mp.tanh(b / 4) ** 2) - p
    lo, hi = mp.mpf("1e-20"), mp.mpf(b)
    for _ in range(200):
        mid = (lo + hi) / 2
        if A(mid) > 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def layer(N, R, gamma, a0, eps, p, q):
    b = b_root(gamma, a0)
    k = k_leading(N, R, b, p)
    X = mp.mpf(N - 1) / (2 * R)
    c = mp.cosh(b / 2)
    sech2 = lambda x: 1 / mp.cosh(x) ** 2
    Xb, Xk = 1 + X * sech2(b / 4), 1 + X * sech2(k / 4)
    H = gamma * (N * c**2 - 1) * sech2(b / 4) / (gamma * c + 1) * Xb / Xk - (2 * q - 4 * N * p * mp.sinh(b / 4) ** 2) / Xk
    u2 = k + eps / R * H * mp.sinh(k / 2)
    du2 = 2 * mp.sinh(k / 2) * (1 / eps - (2 * N * mp.sinh(b / 4) ** 2 + (N - 1) / mp.mpf(2) * sech2(k / 4) - H / 2 * mp.cosh(k / 2)) / R)
    Hs = gamma * (N - 1) * sech2(b / 4) / (gamma * c + 1) * Xb / Xk - 2 * q / Xk
    v2 = k + eps / R * Hs * mp.sinh(k / 2)
    lim_value = 4 * N * mp.sinh(b / 4) ** 2 * mp.sinh(k / 2) / (R + (N - 1) / mp.mpf(2) * sech2(k / 4)) * (gamma * Xb / (gamma * c + 1) + p)
    lim_slope = -(4 * mp.mpf(N) / R) * mp.sinh(b / 4) ** 2 * mp.sinh(k / 2) * (1 - mp.cosh(k / 2) / Xk * (gamma * Xb / (gamma * c + 1) + p))
    lim_boundary = (mp.mpf(N) / R) * 2 * gamma * mp.sinh(b / 2) * (c - 1) / (gamma * c + 1)
    return dict(k=k, H=H, u2=u2, du2=du2, H_sharp=Hs, v2=v2,
                lim_boundary=lim_boundary, lim_value=lim_value, lim_slope=lim_slope)


def weights(b):
    out = {}
    Fs = {
        "s": lambda x: x,
        "s^2": lambda x: x * x,
        "|s|^1/2": lambda x: mp.sqrt(abs(x)),
        "2asinh(s/2)": lambda x: 2 * mp.asinh(x / 2),
        "2sinh(s/2)": lambda x: 2 * mp.sinh(x / 2),
    }
    for name, F in Fs.items():
        gi = lambda t: F(2 * mp.sinh(t / 2)) / (2 * mp.sinh(t / 2))
        gii = lambda t: F(t) / (2 * mp.sinh(t / 2))
        out[name] = {"i": mp.quad(gi, [0, b]), "ii": mp.quad(gii, [0, b])}
    return out


def main():
    ref = dict(N=2, R=1, gamma=1, a0=2)
    data = {
        "b_ref": boundary(2, 1, 1, 2, mp.mpf("0.01"))["b"],
        "boundary_N3_b1": boundary(3, 1, 1, 1 + 2 * mp.sinh(mp.mpf("0.5")), mp.mpf("0.01")),
        "boundary_ref_eps001": boundary(2, 1, 1, 2, mp.mpf("0.01")),
        "k_N3_b1_p1": k_leading(3, 1, mp.mpf(1), 1),
        "layer_ref_p1_q03": layer(2, 1, 1, 2, mp.mpf("0.01"), 1, mp.mpf("0.3")),
        "layer_N2_b1_p1": layer(2, 1, 1, 1 + 2 * mp.sinh(mp.mpf("0.5")), mp.mpf("0.01"), 1, 0),
        "weights_ref": weights(b_root(1, 2)),
        "reference": ref,
    }

    def conv(x):
        if isinstance(x, dict):
            return {k: conv(v) for k, v in x.items()}
        if isinstance(x, mp.mpf):
            return float(x)
        return x

    path = Path(__file__).resolve().parents[1] / "tests" / "oracle_values.json"
    path.write_text(json.dumps(conv(data), indent=2, sort_keys=True) + "\n")
    print(path.read_text())


if __name__ == "__main__":
    main()
