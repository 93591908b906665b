"""Equilibrium of the receiver chain versus long protocol simulations.

Solves the 3n+1-state chain for the both-open probability, compares it to
the closed form 1/(1 + n(2p - p**2)), and then measures the same quantity
by simulating the protocol.  The omniscient run lands on the chain value;
the literal run with real delayed messages falls below it, because stale
success announcements keep resetting receivers that hold fresh heralds.
"""

from mpslink import (
    SimConfig,
    SimMode,
    des_run,
    full_chain,
    rate_from_stationary,
    stationary,
    stationary_open_prob,
)

N, P = 50, 0.1
TAU_C_NS = 500.0

chain = full_chain(N, P)
pi = stationary(chain)
closed = stationary_open_prob(N, P)
print(f"chain with n={N}, p={P}: {chain.num_states} states")
print(f"numeric pi(0,0)     = {pi[0]:.9f}")
print(f"closed form         = {closed:.9f}")
print(f"predicted pair rate = {rate_from_stationary(closed, P * P, TAU_C_NS * 1e-9):.2f} /s")

for mode in (SimMode.OMNISCIENT, SimMode.LITERAL):
    stats = des_run(
        SimConfig(
            beta_qd=1.0, beta_ms=P, n=N, total_cycles=5_000_000,
            seed=42, mode=mode, tau_c_ns=TAU_C_NS,
        )
    )
    print(
        f"{mode.value:>10} run: both-open fraction {stats.open_fraction:.5f}, "
        f"rate {stats.rate_hz:.2f} /s, "
        f"{stats.one_sided_confirms} confirmations lost to stale resets"
    )
