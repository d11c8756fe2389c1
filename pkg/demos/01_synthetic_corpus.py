"""Build a synthetic epitope corpus with a planted immunogenic signal.

Half the records are immunogenic. The signal strength controls how strongly
the sequences betray the label: at 1.0 every positive carries the motif and
no negative does; at 0.5 sequences carry no label information at all.
Positives also get stronger binding (lower nM) and higher conservation.
"""

import numpy as np

from immunokit import generate_synthetic, split_dataset, write_records

corpus = generate_synthetic(n=2000, motif="LQR", signal_strength=0.9, seed=7)

pos = [r for r in corpus.records if r.immunogenic == 1]
neg = [r for r in corpus.records if r.immunogenic == 0]
print(f"records: {len(corpus)} ({len(pos)} positive / {len(neg)} negative)")
print(f"motif rate in positives:  {sum('LQR' in r.peptide for r in pos) / len(pos):.3f}")
print(f"motif rate in negatives:  {sum('LQR' in r.peptide for r in neg) / len(neg):.3f}")
print(f"median affinity (nM):     pos {np.median([r.affinity_nm for r in pos]):8.1f}   "
      f"neg {np.median([r.affinity_nm for r in neg]):8.1f}")
print(f"mean conservation (%):    pos {np.mean([r.conservation_pct for r in pos]):8.1f}   "
      f"neg {np.mean([r.conservation_pct for r in neg]):8.1f}")

# the 80/20 split is a pure function of (records, fraction, seed)
split = split_dataset(corpus, train_fraction=0.8, seed=7)
print(f"split: {len(split.train_idx)} train / {len(split.test_idx)} test")

write_records(corpus, "corpus.csv")
print("wrote corpus.csv")
