"""How spread out is the difference of two incoherent low-rank matrices?

The max-to-Frobenius energy ratio of such a difference decays like 1/p once
scaled by the incoherence and rank; the flat-vector construction shows the
1/(2p) floor is real, so the decay rate cannot be improved.
"""

import numpy as np

import lrsm

print("random rank-3 pairs with Haar frames (200 trials each):")
for p in (50, 100, 400):
    scaled = [lrsm.separation_ratio(*lrsm.random_incoherent_pair(p, 3, seed=k)).scaled
              for k in range(200)]
    print(f"  p={p:4d}: max scaled ratio = {max(scaled):.4f} (no growth in p)")

print("\nadversarial rank-1 pairs (difference supported on 2p entries):")
for p in (10, 100, 1000):
    P, Q = lrsm.adversarial_pair(p, eps=0.1)
    reading = lrsm.separation_ratio(P, Q)
    print(f"  p={p:5d}: ratio = {reading.ratio:.6f} vs floor 1/(2p) = {1 / (2 * p):.6f}")

delta = (lrsm.adversarial_pair(6, 1.0)[0].to_dense()
         - lrsm.adversarial_pair(6, 1.0)[1].to_dense())
print(f"\np=6 adversarial difference (one flat column pair, {np.count_nonzero(delta)} nonzeros):")
print(np.round(delta, 3))
