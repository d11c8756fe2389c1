"""Train the multi-task epitope predictor and plot its learning curves.

The model reads the peptide sequence alone and jointly predicts log10
binding affinity, immunogenicity probability, and conserved fraction.
Training minimizes alpha*L_aff + beta*L_imm + gamma*L_cons with Adam and
stops early once the validation loss plateaus.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from immunokit import TrainConfig, generate_synthetic, split_dataset, train_model1

data = split_dataset(generate_synthetic(2000, "LQR", 0.9, seed=7), 0.8, seed=7)
cfg = TrainConfig(seed=7, epochs=60)
model, report = train_model1(data, cfg)

s = report.summary()
print(f"stopped after epoch {s['stopped_epoch']} (best epoch {s['best_epoch']})")
print(f"train acc {s['final_train_acc']:.3f} / val acc {s['final_val_acc']:.3f}")
print(f"train loss {report.train_loss[0]:.3f} -> {s['final_train_loss']:.3f}")

epochs = range(report.stopped_epoch + 1)
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
ax1.plot(epochs, report.train_loss, label="train")
ax1.plot(epochs, report.val_loss, label="validation")
ax1.set_xlabel("epoch")
ax1.set_ylabel("loss")
ax1.legend()
ax2.plot(epochs, report.train_acc, label="train")
ax2.plot(epochs, report.val_acc, label="validation")
ax2.set_xlabel("epoch")
ax2.set_ylabel("accuracy")
ax2.legend()
fig.tight_layout()
fig.savefig("training_curves.png", dpi=120)
print("wrote training_curves.png")

# a few spot predictions
peptides = ["YLQPRTFLL", "ACDEGHKMN", "WLQRTFVAL"]
for pep, out in zip(peptides, model.forward(peptides)):
    print(f"{pep}: p(immunogenic)={out.immunogenicity_prob:.3f} "
          f"affinity=10^{out.affinity_pred:.2f} nM conservation={out.conservation_pred:.2f}")
