"""Scratch oracle run: high-precision reference values to freeze into tests.

Everything here is computed WITHOUT the package (mpmath / scipy.quad only),
so the frozen numbers are independent of the implementation.
"""
import mpmath as mp
import numpy as np
from scipy.integrate import quad

mp.mp.dps = 30

H = mp.mpf("0.1")
ALPHA = H + mp.mpf("0.5")          # 0.6
GA = mp.gamma(ALPHA)               # Gamma(0.6)
GB = mp.gamma(1 - ALPHA)           # Gamma(0.4)

print("Gamma(0.6) =", mp.nstr(GA, 17))
print("Gamma(1.6) =", mp.nstr(mp.gamma(ALPHA + 1), 17))
print("Gamma(0.4) =", mp.nstr(GB, 17))
print("reflection check pi/sin(0.4 pi) =", mp.nstr(mp.pi / mp.sin(mp.pi * (1 - ALPHA)) / GB, 17))

# fractional kernel K(t) = t^(H-1/2)/Gamma(H+1/2)
for t in ("1.0", "4.0", "0.25"):
    t = mp.mpf(t)
    print(f"K_H(t={t}) =", mp.nstr(t ** (H - mp.mpf("0.5")) / GA, 17))
# H=0.25 case
H2 = mp.mpf("0.25")
print("K_{H=0.25}(t=0.5) =", mp.nstr(mp.mpf("0.5") ** (H2 - mp.mpf("0.5")) / mp.gamma(H2 + mp.mpf("0.5")), 17))

# mu density mu(gamma) = gamma^(-H-1/2) / (Gamma(H+1/2) Gamma(1/2-H))
def mu_dens(g):
    return g ** (-H - mp.mpf("0.5")) / (GA * GB)

print("mu(1)  =", mp.nstr(mu_dens(mp.mpf(1)), 17))
print("mu(16) =", mp.nstr(mu_dens(mp.mpf(16)), 17))

# weights/rates for a cell [lo, hi]: c = M0, gamma = M1/M0, via direct quadrature
def cell_quad(lo, hi):
    M0 = mp.quad(lambda g: mu_dens(g), [lo, hi])
    M1 = mp.quad(lambda g: g * mu_dens(g), [lo, hi])
    return M0, M1 / M0

c1, g1 = cell_quad(mp.mpf(0), mp.mpf(1))
print("cell [0,1]: c =", mp.nstr(c1, 17), " gamma =", mp.nstr(g1, 17), " (2/7 =", mp.nstr(mp.mpf(2) / 7, 17), ")")
c2, g2 = cell_quad(mp.mpf(1), mp.mpf(2))
print("cell [1,2]: c =", mp.nstr(c2, 17), " gamma =", mp.nstr(g2, 17))

# optimal uniform step, n=20, T=1, H=0.1 and n=500
def pas(n, T, Hh):
    Hh = mp.mpf(Hh)
    return (mp.mpf(n) ** (mp.mpf(-1) / 5) / mp.mpf(T)) * (mp.sqrt(mp.mpf(10)) * (1 - 2 * Hh) / (5 - 2 * Hh)) ** (mp.mpf(2) / 5)

print("optimal_step(20, 1, 0.1)  =", mp.nstr(pas(20, 1, "0.1"), 17))
print("optimal_step(500, 1, 0.1) =", mp.nstr(pas(500, 1, "0.1"), 17))
print("optimal_step(100, 1, 0.1) =", mp.nstr(pas(100, 1, "0.1"), 17))

# ---- L2 / L1 for the EMPTY kernel, H=0.1, T=1
T = mp.mpf(1)
l2_empty = mp.sqrt(T ** (2 * H) / (2 * H * GA ** 2))
l1_empty = T ** ALPHA / mp.gamma(ALPHA + 1)
print("l2(empty, H=0.1, T=1) =", mp.nstr(l2_empty, 17))
print("l1(empty, H=0.1, T=1) =", mp.nstr(l1_empty, 17))

# ---- L2 / L1 for the 2-cell kernel on partition [0,1,2], H=0.1, T=1 (dense oracle)
cs = [float(c1), float(c2)]
gs = [float(g1), float(g2)]
Hf = 0.1
alpha_f = 0.6
import math
GAf = math.gamma(alpha_f)

def Kf(t):
    return t ** (Hf - 0.5) / GAf

def Kn(t):
    return sum(c * math.exp(-g * t) for c, g in zip(cs, gs))

# L2 via substitution t = u^(1/(2H)) so that K^2 dt ~ const du:
# integral (Kn-K)^2 dt, t in (0,1].  dt = (1/(2H)) u^(1/(2H)-1) du
M = 2_000_000
u = np.linspace(1e-300, 1.0, M)
t = u ** (1.0 / (2 * Hf))
w = (1.0 / (2 * Hf)) * u ** (1.0 / (2 * Hf) - 1.0)
Kt = t ** (Hf - 0.5) / GAf
Knt = np.zeros_like(t)
for c, g in zip(cs, gs):
    Knt += c * np.exp(-g * t)
f = (Knt - Kt) ** 2 * w
l2sq = np.trapezoid(f, u)
print("l2( [0,1,2] kernel ) dense  =", math.sqrt(l2sq))

# closed-form cross-check with mpmath quad (K - Kn)^2 with singularity splitting
val = mp.quad(lambda tt: (sum(c * mp.e ** (-g * tt) for c, g in zip(cs, gs)) - tt ** (H - mp.mpf("0.5")) / GA) ** 2,
              [0, mp.mpf("0.001"), mp.mpf("0.1"), 1])
print("l2( [0,1,2] kernel ) mpquad =", mp.nstr(mp.sqrt(val), 15))

# L1: check sign of Kn - K on a dense grid (expect strictly negative)
tg = np.exp(np.linspace(np.log(1e-12), 0.0, 20000))
d = np.array([Kn(x) - Kf(x) for x in tg])
print("max(Kn-K) over grid:", d.max(), " (expected < 0: Kn < K everywhere)")
l1v = mp.quad(lambda tt: abs(sum(c * mp.e ** (-g * tt) for c, g in zip(cs, gs)) - tt ** (H - mp.mpf("0.5")) / GA),
              [0, mp.mpf("0.001"), mp.mpf("0.1"), 1])
print("l1( [0,1,2] kernel ) mpquad =", mp.nstr(l1v, 15))
# closed form if no sign change: T^a/G(a+1) - sum c (1-e^{-g T})/g
l1cf = l1_empty - sum(mp.mpf(c) * (1 - mp.e ** (-mp.mpf(g) * T)) / mp.mpf(g) for c, g in zip(cs, gs))
print("l1 closed-form           =", mp.nstr(l1cf, 15))

# ---- f2 / f1 bounds for uniform partition n=20, step=optimal_step(20,1,0.1), H=0.1, T=1
step = pas(20, 1, "0.1")
etas = [step * i for i in range(21)]

def cell_var_quad(lo, hi):
    M0 = mp.quad(lambda g: mu_dens(g), [lo, hi])
    M1 = mp.quad(lambda g: g * mu_dens(g), [lo, hi])
    M2 = mp.quad(lambda g: g * g * mu_dens(g), [lo, hi])
    return M2 - M1 ** 2 / M0

S = sum(cell_var_quad(etas[i], etas[i + 1]) for i in range(20))
eta_n = etas[-1]
f2 = (T ** mp.mpf("2.5") / (2 * mp.sqrt(mp.mpf(5)))) * S + eta_n ** (-H) / (H * GA * GB * mp.sqrt(2))
f1 = (T ** 3 / 6) * S + eta_n ** (-H - mp.mpf("0.5")) / (mp.gamma(H + mp.mpf("1.5")) * GB)
print("f2_bound(uniform n=20, H=0.1, T=1) =", mp.nstr(f2, 15))
print("f1_bound(uniform n=20, H=0.1, T=1) =", mp.nstr(f1, 15))
print("f1 tail unit coeff 1/(G(1.6)G(0.4)) =", mp.nstr(1 / (mp.gamma(mp.mpf("1.6")) * GB), 15))

# ---- Mittag-Leffler references (mpmath direct series at dps=50)
def ml(a, b, x, dps=50):
    with mp.workdps(dps):
        a, b, x = mp.mpf(a), mp.mpf(b), mp.mpf(x)
        s = mp.mpf(0)
        k = 0
        while True:
            term = x ** k / mp.gamma(a * k + b)
            s += term
            if abs(term) < mp.mpf(10) ** (-dps - 5) * max(1, abs(s)) and k > 5:
                break
            k += 1
            if k > 100000:
                raise RuntimeError
        return s

for (a, b, x) in [("0.6", "0.6", "-0.5"), ("0.6", "1.6", "-0.3"), ("0.6", "0.6", "-30.0"),
                  ("0.6", "1.0", "-5.0"), ("0.9", "1.9", "-100.0"), ("0.75", "0.75", "2.0")]:
    print(f"E_({a},{b})({x}) =", mp.nstr(ml(a, b, x, dps=60), 17))

# resolvent R(t) = t^(a-1) E_{a,a}(-lam t^a), a=0.6, lam=0.3:
for tv in ("0.5", "1.0"):
    tvm = mp.mpf(tv)
    r = tvm ** (mp.mpf("0.6") - 1) * ml("0.6", "0.6", -mp.mpf("0.3") * tvm ** mp.mpf("0.6"))
    print(f"resolvent(0.6, 0.3, {tv}) =", mp.nstr(r, 17))
# resolvent identity check  R = K - lam K*R at t=0.7 via quadrature
lam = mp.mpf("0.3")
a6 = mp.mpf("0.6")
def Rm(t):
    return t ** (a6 - 1) * ml("0.6", "0.6", -lam * t ** a6)
def Km(t):
    return t ** (a6 - 1) / mp.gamma(a6)
t0 = mp.mpf("0.7")
conv = mp.quad(lambda s: Km(t0 - s) * Rm(s), [0, t0 / 2, t0 - mp.mpf("0.001"), t0])
print("resolvent identity residual at t=0.7:", mp.nstr(Rm(t0) - (Km(t0) - lam * conv), 5))

# forward variance, paper params, constant theta=0.02, lam=0.3, V0=0.02, H=0.1
V0 = mp.mpf("0.02")
th = mp.mpf("0.02")
for tv in ("0.5", "1.0"):
    tvm = mp.mpf(tv)
    # closed form: V0 + th * t^a E_{a,a+1}(-lam t^a)
    cf = V0 + th * tvm ** a6 * ml("0.6", "1.6", -lam * tvm ** a6)
    # quadrature of V0 + th * int_0^t R(s) ds
    qq = V0 + th * mp.quad(lambda s: Rm(s), [0, mp.mpf("0.01"), tvm])
    print(f"fwd_var(t={tv}): closed={mp.nstr(cf, 17)}  quad={mp.nstr(qq, 17)}")

# shifted multi-factor g closed form check:
# int_0^t e^{-g(t-s)} s^{b-1} ds  vs  t^b Gamma(b) E_{1,b+1}(-g t),  b = 1/2 - H = 0.4
b = mp.mpf("0.4")
for gv, tv in [("0.5", "0.8"), ("3.0", "1.0"), ("25.0", "0.3")]:
    g_, t_ = mp.mpf(gv), mp.mpf(tv)
    lhs = mp.quad(lambda s: mp.e ** (-g_ * (t_ - s)) * s ** (b - 1), [0, t_ / 100, t_])
    rhs = t_ ** b * mp.gamma(b) * ml("1.0", mp.mpf("1.4"), -g_ * t_)
    print(f"shifted-g check g={gv} t={tv}: quad={mp.nstr(lhs, 15)} ml={mp.nstr(rhs, 15)}")
