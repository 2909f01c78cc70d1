"""Single-photon wavepacket scattering off a mid-chain qubit.

Displaces a Gaussian coherent packet on top of the interacting ground
state and lets it collide with the qubit; transmitted and reflected
photon fractions are read off the relative real-space profile.
"""

from ohmicline.config import ExperimentConfig
from ohmicline.experiments import run_scenario, write_record

config = ExperimentConfig(
    scenario="scatter", out_dir="runs", run_id="demo-scatter",
    L=61, omega_at=1 / 3, g=0.7, i_q="mid", n_max=3, chi_max=24,
    dt=0.05, t_final=40.0, gs_tol=1e-7,
    omega=0.062, n_photons=1.0, profile_stride=100)

record = run_scenario(config)
out = write_record(record, config)

s = record.scalars
print(f"packet at w = {s['omega']:.3f} "
      f"(width {s['sigma_omega']:.3f}), launched from site "
      f"{int(s['x_center'])} toward the qubit at site "
      f"{config.resolved_i_q()}")
print(f"  transmitted fraction: {s['transmitted_fraction']:.3f}")
print(f"  reflected fraction:   {s['reflected_fraction']:.3f}")
print("near the renormalized resonance the qubit reflects strongly; "
      "far off resonance the packet passes through")
print(f"snapshots written to {out} (grid_n_i_rel.csv shows the collision)")
