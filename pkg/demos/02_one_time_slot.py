"""
One time slot, end to end
=========================

Decode a random joint action, repair it, check every constraint and
evaluate the three slice objectives.
"""

import numpy as np

from sagin_slicing import orchestrator as orch
from sagin_slicing.channel import sample_realization
from sagin_slicing.config import ScenarioConfig
from sagin_slicing.slices import check_constraints, evaluate
from sagin_slicing.topology import init_topology

config = ScenarioConfig()
rng = np.random.default_rng(1)
state = init_topology(config, 1)

eta, rho, uav = orch.decode_central_action(rng.uniform(size=12 + 2 * config.V), config)
print("subchannel shares (rows = classes, cols = vBS, vUAV, vLEO)\n", eta.round(3))
print("power shares\n", rho.round(3))
print("vUAV positions\n", uav.round(1))

state = state.with_uavs(uav)
parts = [orch.decode_distributed_action(rng.uniform(size=3 * k), s, eta, rho, config)
         for s, k in enumerate(config.K)]
decision = orch.assemble_decision(parts, state, eta, rho, uav, config)
print("violations before repair:", sorted({v.code for v in check_constraints(decision, config)}))

for dual in (False, True):
    fixed, n = orch.dual_resource_allocation(decision, config, dual=dual)
    comp, sub, _ = fixed.assignment()
    m = evaluate(fixed, sample_realization(state, config, np.random.default_rng(2)), state, config)
    print(f"{'dual' if dual else 'single'} repair: {n} conflicting users, "
          f"{np.sum(comp >= 0)} served, violations {len(check_constraints(fixed, config))}")
    print(f"  throughput {m.throughput_bps / 1e6:.1f} Mbps, delay {m.avg_delay_s * 1e3:.2f} ms, "
          f"SINR {m.avg_sinr_linear:.3g}")
