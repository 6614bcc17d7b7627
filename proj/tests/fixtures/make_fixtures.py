# Copyright 2026 The mmsel Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates the fixture pack and its reference labels.

Reference marginals come from exhaustive subset enumeration with numpy
determinants and a scipy root finder for the temperature, which shares no
code with the C++ library.
"""

import itertools
import json
import pathlib

import numpy as np
from scipy.optimize import brentq

GAMMA, SIGMA, EPS, MU = 2.0, 0.8, 1e-5, 3.0
HERE = pathlib.Path(__file__).resolve().parent


def unit(v):
    return v / np.linalg.norm(v)


def kernel(text, images):
    r = images @ text
    q = np.exp(GAMMA * r)
    s = images @ images.T
    kappa = np.exp(-2.0 * (1.0 - s) / (2.0 * SIGMA**2))
    np.fill_diagonal(kappa, 1.0)
    root = np.sqrt(q)
    return root[:, None] * kappa * root[None, :] + EPS * np.eye(len(q))


def enumerate_marginals(L, t):
    n = L.shape[0]
    z = 0.0
    pi = np.zeros(n)
    for k in range(n + 1):
        for subset in itertools.combinations(range(n), k):
            w = (np.linalg.det(L[np.ix_(subset, subset)]) if subset else 1.0) / t**k
            z += w
            pi[list(subset)] += w
    return pi / z


def temperature(L, mu):
    lam = np.linalg.eigvalsh(L)
    if mu >= len(lam):
        return 0.0
    f = lambda t: np.sum(lam / (lam + t)) - mu
    hi = max(lam.max(), 1.0)
    while f(hi) > 0:
        hi *= 2.0
    return brentq(f, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def main():
    rng = np.random.default_rng(20260401)
    dim = 8
    corpus, expected = [], []
    for a in range(24):
        n = 1 + a % 8
        text = unit(rng.normal(size=dim))
        images = np.array([unit(rng.normal(size=dim) + 0.5 * text) for _ in range(n)])
        if n >= 3 and a % 3 == 0:
            images[1] = images[0]
        art = {
            "id": f"fx{a:02d}",
            "text_embedding": text.tolist(),
            "images": [
                {"id": f"fx{a:02d}_{i}", "embedding": e.tolist(), "gold": bool(i % 2 == 0)}
                for i, e in enumerate(images)
            ],
        }
        corpus.append(json.dumps(art))
        L = kernel(text, images)
        t = temperature(L, MU)
        pi = np.ones(n) if t == 0.0 else enumerate_marginals(L, t)
        expected.append(json.dumps({"id": art["id"], "t_star": t, "pi": pi.tolist()}))
    (HERE / "pack.jsonl").write_text("\n".join(corpus) + "\n")
    (HERE / "pack_expected.jsonl").write_text("\n".join(expected) + "\n")


if __name__ == "__main__":
    main()
