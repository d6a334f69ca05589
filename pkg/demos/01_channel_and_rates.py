"""
Channel gains and subchannel rates
==================================

How the three layers' gains fall with distance, and what that means for
the rate of one subchannel at full per-slot power.
"""

import numpy as np

from sagin_slicing import channel
from sagin_slicing.config import ScenarioConfig

config = ScenarioConfig()
rng = np.random.default_rng(0)

# mean gains over fading; the satellite is always z_leo away
for d in (100.0, 500.0, 1000.0, 2000.0):
    ground = channel.terrestrial_gain(np.full(20_000, d), config.alpha_pl, rng).mean()
    air = channel.uav_gain_mean(np.hypot(d, config.z_uav_m), config)
    print(f"d = {d:6.0f} m  vBS {ground:.3e}  vUAV {air:.3e}  "
          f"vLEO {channel.leo_gain(config.z_leo_m, config):.3e}")

# one subchannel, no interference, a third of each budget spread over 2 slots
share = config.power_budgets / 3 / 2
for name, p, g in zip(("vBS", "vUAV", "vLEO"), share,
                      (1000.0 ** -config.alpha_pl,
                       channel.uav_gain_mean(1000.0, config),
                       channel.leo_gain(config.z_leo_m, config))):
    rate = channel.subchannel_rate(p, g, 0.0, config)
    print(f"{name:5s} {p:7.1f} W -> {rate / 1e6:6.2f} Mbps")

# a same-slice interferer on the same subchannel at a similar distance
g = 1000.0 ** -config.alpha_pl
print("vBS with one co-channel interferer:",
      f"{channel.subchannel_rate(share[0], g, share[0] * g, config) / 1e6:.2f} Mbps")
