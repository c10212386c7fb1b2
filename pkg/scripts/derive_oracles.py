#!/usr/bin/env python3
"""Independent oracle computations frozen into the test suite.

Everything here is computed with plain numpy from first principles (batch
formulas, direct inverses, textbook ridge regression), never by importing
the package under test. Run it and copy the printed constants into tests;
each frozen constant in the tests cites this script.
"""

import numpy as np

np.set_printoptions(precision=15, suppress=False, linewidth=120)


def section(name):
    print("\n" + "=" * 8, name, "=" * 8)


# ---------------------------------------------------------------- line network
# 7 observations: four unit singletons plus pairs {1,2}, {2,3}, {3,4}.
X_LINE = np.vstack([np.eye(4), [1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1]]).astype(float)
BETA_LINE = np.array([1.0, 2.0, 3.0, 4.0])
U_LINE = X_LINE @ BETA_LINE

section("line network")
Z = X_LINE.T @ X_LINE
W = np.linalg.inv(Z)
print("Z =", Z.astype(int).tolist())
print("21*W =", np.round(W * 21, 12).tolist())
gain = (W @ np.eye(4)[0]) / (1.0 + np.eye(4)[0] @ W @ np.eye(4)[0])
print("34*gain(e1) =", np.round(gain * 34, 12).tolist())
print("gain to 3 decimals =", np.round(gain, 3).tolist())

vals, vecs = np.linalg.eigh(Z)
print("eigs desc =", vals[::-1].tolist())
print("closed forms: 3+sqrt2 =", 3 + np.sqrt(2), " 3-sqrt2 =", 3 - np.sqrt(2))
s2 = np.sqrt(2.0)
vn_closed = np.array([1.0, 1.0 + s2, 1.0 + s2, 1.0])
vn_closed /= np.linalg.norm(vn_closed)
vc_closed = np.array([-1.0, 1.0, -1.0, 1.0]) / 2.0
print("vN closed =", vn_closed.tolist())
print("vC closed (before sign normalization) =", vc_closed.tolist())
print("vC sign-normalized (first largest-|.| entry positive) =", (-vc_closed).tolist())
assert abs(vals[-1] - (3 + s2)) < 1e-12 and abs(vals[0] - 1.0) < 1e-12
top = vecs[:, -1] * np.sign(vecs[np.argmax(np.abs(vecs[:, -1])), -1])
assert np.max(np.abs(top - vn_closed)) < 1e-12

# kappa forecasts after absorbing one unit of each extreme direction
lmax, lmid, lmin = vals[-1], vals[-2], vals[0]
print("kappa =", lmax / lmin)
print("after vN: new eigs sorted =", sorted([lmax + 1, 3.0, 3 - s2, 1.0]))
print("  kappa_PB =", (lmax + 1) / lmin)
Z_cb = Z + np.outer(-vc_closed * 2 / 2, -vc_closed)  # unit vC
Z_cb = Z + np.outer(vc_closed, vc_closed) * (1 / (vc_closed @ vc_closed)) * 0
# direct: add unit-norm vC outer product
vC_unit = (-vc_closed) / np.linalg.norm(vc_closed)
Z_cb = Z + np.outer(vC_unit, vC_unit)
vals_cb = np.linalg.eigvalsh(Z_cb)
print("after vC: eigs =", vals_cb.tolist())
print("  kappa_CB =", vals_cb[-1] / vals_cb[0], " new_min = min(1+1, 3-sqrt2) =", min(2.0, 3 - s2))

# ------------------------------------------------------------- companion good
section("companion good (line W)")
delta = np.array([0.0, -1.0, 0.0, 0.0])
scores = W[:, 0] / (1.0 + np.diag(W)) * delta
print("scores (target = good 0, raise) =", scores.tolist())
print("argmin index =", int(np.argmin(scores)), " argmax index =", int(np.argmax(scores)))
print("5/31 =", 5 / 31)

# --------------------------------------------------------- joint increase region
section("joint increase region")
print("pair (0,1): lower = |w01|/w11 =", abs(W[0, 1]) / W[1, 1], " upper = w00/|w01| =", W[0, 0] / abs(W[0, 1]))

# ------------------------------------------------------------------- quadratic
section("interaction quadratic")
# h(x) = di*x + dj*(1-x) + dij*x*(1-x), di=1, dj=-1, dij=1 -> -x^2+3x-1
root = (3 - np.sqrt(5)) / 2
print("closed root (3-sqrt5)/2 =", root, " h(root) =", -root**2 + 3 * root - 1)

# --------------------------------------------------------------- fig-6 dynamics
section("fig-6 dynamics (independent RLS, rho = 1e8)")
rho = 1e8


def rls_path(pick_bundle, T=8):
    Winv = np.eye(2) / rho  # information
    Wc = np.eye(2) * rho
    est = np.array([0.9, 1.2])
    beta = np.array([1.0, 1.0])
    out = []
    for t in range(T):
        x = pick_bundle(t, Winv, est, beta)
        x = x / np.linalg.norm(x)
        u = float(x @ beta)
        wx = Wc @ x
        den = 1.0 + float(x @ wx)
        est = est + wx / den * (u - float(x @ est))
        Wc = Wc - np.outer(wx, wx) / den
        Winv = Winv + np.outer(x, x)
        out.append(float((est - beta) @ (est - beta)))
    return out


def pick_orth(t, Winv, est, beta):
    d = est - beta  # (-0.1, 0.2)
    return np.array([d[1], -d[0]])


def pick_e(k):
    return lambda t, Winv, est, beta: np.eye(2)[k]


def pick_srr(t, Winv, est, beta):
    return np.eye(2)[t % 2]


print("orthogonal mse:", [f"{v:.3e}" for v in rls_path(pick_orth)])
print("pb (e1 forever):", [f"{v:.3e}" for v in rls_path(pick_e(0))])
print("srr:", [f"{v:.3e}" for v in rls_path(pick_srr)])
print("closed: |delta0|^2 = 0.05, after e1 only: 0.2^2 = 0.04")

# ------------------------------------------------------------------ market plans
section("market: discovery example")
# beta=(0,1), gamma=0, beta_hat0=(0.8,0.1), W=I; maximize E[beta_hat_{2,1}]
d = np.array([0.8, -0.9])
for x in (np.array([0.0, 1.0]), np.array([0.0, -1.0]), np.array([1.0, 0.0])):
    drift2 = -x[1] * float(x @ d) / (1 + float(x @ x))
    print(f"x = {x.tolist()} -> drift on good 2 = {drift2}")
print("p2 at e2 = 0.1 + 0.45 =", 0.1 + 0.45)

section("market: manipulation preserve example")
# beta=(1,0.2), beta_hat0=(1.5,0.1), gamma=0, W=I; zero-drift on good 1 needs x'delta=0
dm = np.array([0.5, -0.1])
x = np.array([1 / 6, 5 / 6])
print("x'delta =", float(x @ dm), " margin =", float(x @ np.array([1.5, 0.1])))

# --------------------------------------------------------------- welfare example
section("welfare example")
beta, bhat, gamma = np.array([1.0, 0.9]), np.array([0.5, 1.2]), np.zeros(2)
xs = np.eye(2)[np.argmax(beta - gamma)]
xh = np.eye(2)[np.argmax(bhat - gamma)]
pe = float(xs @ (bhat - beta))
cbe = float((xh - xs) @ (bhat - beta))
pbe = float((xh - xs) @ (bhat - gamma))
print("price_effect =", pe, " cs_bundle =", cbe, " profit_bundle =", pbe)
print("d_cs =", -pe - cbe, " d_profit =", pe + pbe, " d_welfare =", (xh - xs) @ (beta - gamma))

# ------------------------------------------------------------------ corpus replay
section("corpus20 replay oracle (direct ridge/exact formulas)")
ROWS = [
    (1, ["ash"], 120.0),
    (2, ["ash", "birch", "cedar"], 300.0),
    (3, ["fir"], 80.0),
    (4, ["fir", "gingko", "hazel"], 240.0),
    (5, ["birch"], 110.0),
    (6, ["elm", "ash"], 200.0),
    (7, ["gingko"], 90.0),
    (8, ["dogwood"], 60.0),
    (9, ["cedar", "elm"], 210.0),
    (10, ["hazel"], 100.0),
    (11, ["ivy"], 70.0),
    (12, ["ash", "birch", "cedar"], 320.0),
    (13, ["elm", "fir"], 190.0),
    (14, ["gingko", "hazel"], 180.0),
    (15, ["dogwood", "ivy"], 140.0),
    (16, ["cedar"], 115.0),
    (17, ["fir", "gingko", "hazel"], 260.0),
    (18, ["birch", "cedar"], 215.0),
    (19, ["elm"], 95.0),
    (20, ["ash", "elm", "fir"], 230.0),
]
entities = []
for _, items, _ in ROWS:
    for it in items:
        if it not in entities:
            entities.append(it)
print("entities (first appearance):", entities)
k = len(entities)
col = {e: i for i, e in enumerate(entities)}
Xc = np.zeros((len(ROWS), k))
for r, (_, items, _) in enumerate(ROWS):
    for it in items:
        Xc[r, col[it]] = 1.0
uc = np.array([u for _, _, u in ROWS])

ranks = [int(np.linalg.matrix_rank(Xc[:t])) for t in range(1, 21)]
print("rank path:", ranks)
frt = 1 + ranks.index(k)
print("full_rank_time =", frt)


def beta_at(t):
    """Display path: ridge until rank completes, exact afterwards."""
    Xt, ut = Xc[:t], uc[:t]
    if np.linalg.matrix_rank(Xt) < k:
        return np.linalg.solve(Xt.T @ Xt + np.eye(k) / rho, Xt.T @ ut)
    return np.linalg.solve(Xt.T @ Xt, Xt.T @ ut)


final = beta_at(20)
print("final beta:", {e: round(float(final[col[e]]), 9) for e in entities})
d12 = beta_at(12) - beta_at(11)
print("record-12 deltas:", {e: f"{float(d12[col[e]]):+.9f}" for e in entities})
Z11 = Xc[:11].T @ Xc[:11]
W11 = np.linalg.inv(Z11)
x12 = Xc[11]
surprise12 = uc[11] - float(x12 @ beta_at(11))
print("surprise at t=12 =", surprise12)
print("(W11 @ x12) =", {e: f"{float((W11 @ x12)[col[e]]):+.6f}" for e in entities})
print("sign pattern (nonzero at):", [e for e in entities if abs(d12[col[e]]) > 1e-12])

Zf = Xc.T @ Xc
valsf, vecsf = np.linalg.eigh(Zf)
vNf = vecsf[:, -1]
vNf = vNf * np.sign(vNf[np.argmax(np.abs(vNf))])
order = np.lexsort((np.arange(k), -vNf))
print("final centrality order:", [entities[i] for i in order])
print("kappa_final =", valsf[-1] / valsf[0])

# ------------------------------------- singleton-design MSE closed forms
section("singleton-design MSE closed forms")
for t in (4, 10, 50):
    print(f"t={t}: n^2 sigma^2/t = {4.0 / t}")
# a bundled strictly-worse design at t = 4: rows e1, e2, (e1+e2)/sqrt2 twice
Xb = np.vstack([np.eye(2), [[1, 1], [1, 1]] / np.sqrt(2)])
print("bundled tr(Z^-1) at t=4 =", float(np.trace(np.linalg.inv(Xb.T @ Xb))), "> 1.0")
