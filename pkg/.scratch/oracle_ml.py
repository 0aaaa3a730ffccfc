"""Mittag-Leffler reference values with cancellation-aware precision."""
import mpmath as mp

def ml_ref(a, b, x):
    a, b, x = mp.mpf(a), mp.mpf(b), mp.mpf(x)
    # peak Taylor term magnitude ~ exp(|x|^(1/a)); add matching guard digits
    guard = int(0.4343 * float(abs(x) ** (1 / a))) + 30
    with mp.workdps(guard + 30):
        s = mp.mpf(0)
        k = 0
        while True:
            term = x ** k / mp.gamma(a * k + b)
            s += term
            if abs(term) < mp.mpf(10) ** (-(guard + 25)) * max(1, abs(s)) and k > 10:
                break
            k += 1
            if k > 2_000_000:
                raise RuntimeError("no convergence")
        return s

cases = [
    ("0.6", "0.6", "-30.0"),
    ("0.6", "1.6", "-30.0"),
    ("0.9", "1.9", "-100.0"),
    ("0.75", "1.75", "-50.0"),
    ("0.3", "1.3", "-4.0"),
    ("0.6", "0.6", "-8.0"),
    ("0.45", "1.45", "-12.0"),
    ("0.99", "1.0", "-40.0"),
]
for a, b, x in cases:
    v = ml_ref(a, b, x)
    print(f"E_({a},{b})({x}) = {mp.nstr(v, 17)}")
