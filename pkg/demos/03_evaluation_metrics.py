"""Score a trained classifier: confusion matrix, derived metrics, ROC, PR.

Also evaluates the metric formulas on a reference confusion matrix
(tp=2434, tn=2448, fp=53, fn=65) where the expected values are known by
direct formula evaluation.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from immunokit import (
    ConfusionMatrix,
    TrainConfig,
    confusion,
    derived_metrics,
    generate_synthetic,
    pr_curve,
    roc_auc,
    roc_curve,
    split_dataset,
    train_cnn_classifier,
)

# metric formulas on reference counts
reference = ConfusionMatrix(tp=2434, tn=2448, fp=53, fn=65)
m = derived_metrics(reference)
print("reference counts: tp=2434 tn=2448 fp=53 fn=65")
print(f"  accuracy={m.accuracy:.4f} precision={m.precision:.4f} "
      f"recall={m.recall:.4f} f1={m.f1:.4f}")

# a live classifier on held-out data
data = split_dataset(generate_synthetic(2000, "LQR", 0.9, seed=7), 0.8, seed=7)
model, _ = train_cnn_classifier(data, TrainConfig(seed=7, epochs=40))
test = data.test_records()
labels = np.array([r.immunogenic for r in test])
probs = model.predict_prob([r.peptide for r in test])

cm = confusion(labels, probs, threshold=0.5)
live = derived_metrics(cm)
print(f"\nheld-out: tp={cm.tp} tn={cm.tn} fp={cm.fp} fn={cm.fn}")
print(f"  accuracy={live.accuracy:.4f} AUC={roc_auc(labels, probs):.4f}")

roc = roc_curve(labels, probs)
pr = pr_curve(labels, probs, points=50)
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
ax1.plot([p[0] for p in roc], [p[1] for p in roc])
ax1.plot([0, 1], [0, 1], ls="--", c="gray")
ax1.set_xlabel("false positive rate")
ax1.set_ylabel("true positive rate")
ax1.set_title("ROC")
ax2.plot([p[0] for p in pr], [p[1] for p in pr])
ax2.set_xlabel("recall")
ax2.set_ylabel("precision")
ax2.set_title("precision-recall")
fig.tight_layout()
fig.savefig("metric_curves.png", dpi=120)
print("wrote metric_curves.png")
