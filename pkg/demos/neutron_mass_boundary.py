"""Heaviest scatterer that still lets a 1e4 m/s neutron show marginal fringes at 1 K.

Run: python3 demos/neutron_mass_boundary.py
"""

from qci_sim.constants import M_NEUTRON
from qci_sim.kinematics import de_broglie_wavelength, mass_boundary, thermal_coherence_length

T = 1.0
lam = de_broglie_wavelength(M_NEUTRON, 1e4)
M_max = mass_boundary(lam, T)

print(f"neutron wavelength        {lam * 1e9:.4f} nm")
print(f"mass boundary             {M_max:.3e} kg = {M_max / M_NEUTRON:.0f} neutron masses")
# at the boundary the scatterer's thermal coherence length is half the wavelength
print(f"L_c^thermal at boundary   {thermal_coherence_length(M_max, T) / lam:.3f} wavelengths")
for n in (1, 100, 10_000):
    L = thermal_coherence_length(n * M_NEUTRON, T)
    print(f"  {n:>6d} m_n scatterer: L_c^thermal = {L / lam:8.3f} wavelengths")
