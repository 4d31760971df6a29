"""How the harmony threshold shapes the chosen line set.

Two groups of lines are mutually compatible within each group but clash
across groups. Raising kappa prunes weak edges until only the strongest
group survives, and with no feasible pair left the best single line wins.
"""
import numpy as np

from semline import HarmonyGraph, harmony_energy, max_weight_clique

w = np.array([
    [0.80, 0.60, 0.55, 0.10, 0.05],
    [0.60, 0.70, 0.65, 0.10, 0.10],
    [0.55, 0.65, 0.60, 0.05, 0.10],
    [0.10, 0.10, 0.05, 0.90, 0.95],
    [0.05, 0.10, 0.10, 0.95, 0.50],
])
graph = HarmonyGraph.from_matrix(w)
print("energy of {0,1,2}:", harmony_energy(graph, (0, 1, 2)))
print("energy of {3,4}:  ", harmony_energy(graph, (3, 4)))
for kappa in (0.0, 0.5, 0.6, 0.9, 0.96):
    c = max_weight_clique(graph, kappa)
    tag = " (fallback to best single line)" if c.fallback else ""
    print(f"kappa={kappa:.2f}: members {c.members}, energy {c.energy:.2f}{tag}")
