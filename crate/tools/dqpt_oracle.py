"""Dense numpy reference for the quench experiment.

Builds the chain from Kronecker products, evolves exactly with eigh and
with Trotter products of layer exponentials (scipy expm), and prints the
summary values frozen into the acceptance suite.
"""

import sys

import numpy as np
from scipy.linalg import expm


def chain_terms(q, n):
    omega = np.exp(2j * np.pi / q)
    clock = np.diag(omega ** np.arange(q))
    shift = np.roll(np.eye(q), 1, axis=1)
    eye = np.eye(q)

    def embed(ops):
        out = np.array([[1.0 + 0j]])
        for site in range(n):
            out = np.kron(out, ops.get(site, eye))
        return out

    bonds = sum(
        embed({i: np.linalg.matrix_power(clock, k), i + 1: np.linalg.matrix_power(clock, q - k)})
        for i in range(n - 1)
        for k in range(1, q)
    )
    field = sum(
        embed({i: np.linalg.matrix_power(shift, k)}) for i in range(n) for k in range(1, q)
    )
    return bonds, field


def run(q, n, j, g, tau, t_max, order):
    bonds, field = chain_terms(q, n)
    h = -j * bonds - g * field
    energies, vectors = np.linalg.eigh(h)
    psi0 = np.zeros(q**n, complex)
    psi0[0] = 1.0
    coeffs = vectors.conj().T @ psi0
    inter = expm(1j * tau * j * bonds)
    if order == 2:
        half = expm(0.5j * tau * g * field)
        step = half @ inter @ half
    else:
        step = expm(1j * tau * g * field) @ inter
    steps = int(round(t_max / tau))
    psi = psi0.copy()
    rate_dev, infid = 0.0, []
    for k in range(steps + 1):
        t = k * tau
        exact = vectors @ (np.exp(-1j * energies * t) * coeffs)
        le = abs(np.vdot(psi0, exact)) ** 2
        lt = abs(np.vdot(psi0, psi)) ** 2
        rate_dev = max(rate_dev, abs(np.log(max(le, 1e-300)) - np.log(max(lt, 1e-300))) / n)
        infid.append(1.0 - abs(np.vdot(exact, psi)) ** 2)
        psi = step @ psi
    return rate_dev, max(infid)


def exact_rates(q, n, j, g, tau, t_max):
    bonds, field = chain_terms(q, n)
    energies, vectors = np.linalg.eigh(-j * bonds - g * field)
    weights = np.abs(vectors[0, :]) ** 2
    times = tau * np.arange(int(round(t_max / tau)) + 1)
    echo = np.abs(np.exp(-1j * np.outer(times, energies)) @ weights) ** 2
    return times, -np.log(np.maximum(echo, 1e-300)) / n


def cusp_times(times, rate, sharpness=10.0):
    second = np.abs(rate[2:] - 2 * rate[1:-1] + rate[:-2])
    median = np.sort(second)[len(second) // 2]
    return [
        times[i]
        for i in range(1, len(rate) - 1)
        if rate[i] >= rate[i - 1] and rate[i] >= rate[i + 1] and second[i - 1] > sharpness * median
    ]


def infidelity_ratio(q, n, j, g, tau, t_max):
    """Pointwise order-2 infidelity ratio between steps tau and tau/2."""
    bonds, field = chain_terms(q, n)
    energies, vectors = np.linalg.eigh(-j * bonds - g * field)
    psi0 = np.zeros(q**n, complex)
    psi0[0] = 1.0

    def series(step_size):
        half = expm(0.5j * step_size * g * field)
        step = half @ expm(1j * step_size * j * bonds) @ half
        psi, out = psi0.copy(), []
        for k in range(int(round(t_max / step_size)) + 1):
            exact = vectors @ (np.exp(-1j * energies * k * step_size) * (vectors.conj().T @ psi0))
            out.append(1.0 - abs(np.vdot(exact, psi)) ** 2)
            psi = step @ psi
        return np.array(out)

    coarse, fine = series(tau), series(tau / 2)[::2]
    keep = coarse > 0.1 * coarse.max()
    return coarse[keep] / fine[keep]


if __name__ == "__main__":
    order = int(sys.argv[1]) if len(sys.argv) > 1 else 2
    for tau in (0.1, 0.05, 0.02):
        dev, inf = run(3, 6, 0.25, 1.0, tau, 10.0, order)
        print(f"order={order} tau={tau} max_rate_deviation={dev:.6e} max_infidelity={inf:.6e}")
    times, rate = exact_rates(3, 6, 0.25, 1.0, 0.02, 10.0)
    print("cusp_times=" + ",".join(f"{t:.2f}" for t in cusp_times(times, rate)))
    ratio = infidelity_ratio(3, 4, 0.25, 1.0, 0.05, 2.0)
    print(f"infidelity_ratio min={ratio.min():.4f} median={np.median(ratio):.4f} max={ratio.max():.4f}")
