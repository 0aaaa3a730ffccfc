"""Measure golden pricing values on the final integration grid."""
import time

import numpy as np
from scipy.integrate import quad

from roughvol.special import forward_variance
from roughvol.kernels import optimal_step, uniform_partition, weights_from_partition
from roughvol.params import ModelParams
from roughvol.pricing import (
    IntegrationConfig,
    implied_vol,
    lewis_call_price,
    _lewis_nodes,
    _price_from_nodes,
    bs_call_price,
)
from roughvol.riccati import _char_fn_batch
from roughvol.kernels import FractionalKernel

p = ModelParams(lam=0.3, rho=-0.7, nu=0.3, hurst=0.1, v0=0.02, theta=0.02, horizon=1.0)

# --- Adams route, default config, ATM ---
cfg = IntegrationConfig()
handle = lambda z: _char_fn_batch(p, FractionalKernel(0.1), z, 200)
t0 = time.time()
b, vals, diag = _lewis_nodes(handle, cfg)
t1 = time.time()
price_adams = _price_from_nodes(b, vals, 0.0, 1.0)
print(f"adams nodes: {b.shape[0]} b_max={diag['b_max']} doublings={diag['doublings']} "
      f"tail={diag['tail_fraction']:.3e} edge={diag['edge_magnitude']:.3e} t={t1-t0:.2f}s")
print(f"adams ATM price: {price_adams:.17g}")
iv_adams = implied_vol(price_adams, 1.0, 0.0, 1.0)
print(f"adams ATM iv:    {iv_adams:.17g}")

# grid sensitivity: 2x nodes
cfg2 = IntegrationConfig(n_nodes=4000)
b2, vals2, diag2 = _lewis_nodes(lambda z: _char_fn_batch(p, FractionalKernel(0.1), z, 200), cfg2)
price_adams2 = _price_from_nodes(b2, vals2, 0.0, 1.0)
print(f"adams ATM price (n_nodes=4000): {price_adams2:.17g}  delta={abs(price_adams2-price_adams):.3e}")

# steps sensitivity: steps=400
b3, vals3, diag3 = _lewis_nodes(lambda z: _char_fn_batch(p, FractionalKernel(0.1), z, 400), cfg)
price_adams400 = _price_from_nodes(b3, vals3, 0.0, 1.0)
print(f"adams ATM price (steps=400):    {price_adams400:.17g}  delta={abs(price_adams400-price_adams):.3e}")

# --- multifactor n=500 route ---
part = uniform_partition(500, optimal_step(500, 1.0, 0.1))
kern = weights_from_partition(0.1, part)
t0 = time.time()
b4, vals4, diag4 = _lewis_nodes(lambda z: _char_fn_batch(p, kern, z, 200), cfg)
t1 = time.time()
price_mf500 = _price_from_nodes(b4, vals4, 0.0, 1.0)
iv_mf500 = implied_vol(price_mf500, 1.0, 0.0, 1.0)
print(f"mf500 ATM price: {price_mf500:.17g}  t={t1-t0:.1f}s  b_max={diag4['b_max']}")
print(f"mf500 ATM iv:    {iv_mf500:.17g}")
print(f"dual-route rel gap: {abs(price_mf500-price_adams)/price_adams:.6e}")
print(f"iv gap bp: {abs(iv_mf500-iv_adams)*1e4:.3f}")

# --- mf n=20 route (for ordering check) ---
part20 = uniform_partition(20, optimal_step(20, 1.0, 0.1))
kern20 = weights_from_partition(0.1, part20)
b5, vals5, _ = _lewis_nodes(lambda z: _char_fn_batch(p, kern20, z, 200), cfg)
price_mf20 = _price_from_nodes(b5, vals5, 0.0, 1.0)
iv_mf20 = implied_vol(price_mf20, 1.0, 0.0, 1.0)
print(f"mf20 ATM price:  {price_mf20:.17g}")
print(f"mf20 iv gap bp:  {abs(iv_mf20-iv_adams)*1e4:.3f}")

# --- nu -> 0 total variance oracle ---
tv2, err = quad(lambda t: forward_variance(p, t), 0.0, 1.0, limit=200)
print(f"integrated forward variance: {tv2:.17g}  quad_err={err:.1e}")
pnu = ModelParams(lam=0.3, rho=-0.7, nu=1e-8, hurst=0.1, v0=0.02, theta=0.02, horizon=1.0)
t0 = time.time()
price_nu0 = lewis_call_price(lambda z: _char_fn_batch(pnu, FractionalKernel(0.1), z, 200), 0.0, 1.0, 1.0)
t1 = time.time()
bs_ref = bs_call_price(1.0, 0.0, np.sqrt(tv2))
print(f"nu~0 ATM price:  {price_nu0:.17g}  vs BS {bs_ref:.17g}  rel={abs(price_nu0-bs_ref)/bs_ref:.3e} t={t1-t0:.2f}s")
# a couple more strikes
for k in (-0.2, 0.15):
    pr = lewis_call_price(lambda z: _char_fn_batch(pnu, FractionalKernel(0.1), z, 200), k, 1.0, 1.0)
    bsr = bs_call_price(1.0, k, np.sqrt(tv2))
    print(f"  k={k}: lewis={pr:.12g} bs={bsr:.12g} rel={abs(pr-bsr)/bsr:.3e}")
