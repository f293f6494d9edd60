"""Tour of the network substrate: softmax, temperatures, losses, gradients.

Everything downstream (GANs, phantom sampling, the two-site protocol) is
built from these few pieces.
"""

import numpy as np

from phantomnet import nn

# --- softmax and its temperature-raised variant ---------------------------

logits = np.array([[3.0, 1.0, 0.2]])
print("logits:            ", logits[0])
print("softmax:           ", nn.softmax(logits)[0].round(4))
for t in (1.0, 2.0, 5.0, 50.0):
    p = nn.temperature_softmax(logits, t)[0]
    print(f"temperature T={t:<5}", p.round(4),
          f"entropy={nn.entropy(p[None])[0]:.3f}")
# higher T flattens the distribution but never changes the winner;
# that smoothed vector is the "soft target" the increment site learns from

# --- the two training losses ----------------------------------------------

probs = nn.softmax(np.array([[2.0, 0.5, -1.0]]))
ce = nn.cross_entropy_loss(probs, np.array([0]))
print("\ncross-entropy on the true label:", round(ce.loss, 4))

soft_pred = nn.temperature_softmax(np.array([[1.5, 0.7, -0.4]]), 2.0)
soft_target = nn.temperature_softmax(np.array([[2.0, 0.5, -1.0]]), 2.0)
st = nn.soft_target_loss(soft_pred, soft_target)
print("squared soft-target mismatch:   ", round(st.loss, 6),
      "(rmse", round(np.sqrt(st.loss), 6), ")")

# --- a small classifier and its hand-written backward ----------------------

model = nn.build_classifier(input_dim=8, hidden=[16, 12], num_classes=4,
                            seed=0, activation="tanh")
rng = np.random.default_rng(0)
x = rng.uniform(-1, 1, size=(16, 8))
y = rng.integers(0, 4, size=16)

logits = model.forward(x, cache=True)
res = nn.softmax_cross_entropy(logits, y)
grads = model.backward(res.grad)
print("\nparameter tensors:", list(grads))

# every analytic gradient is checked against central finite differences
err = nn.gradient_check(model, nn.softmax_cross_entropy, x, y)
print(f"gradient check, cross-entropy head:  max rel err {err:.2e}")

target = nn.softmax(rng.normal(size=(16, 4)))
err = nn.gradient_check(
    model, lambda lg, t: nn.temperature_soft_loss(lg, t, 2.0), x, target)
print(f"gradient check, soft-target head:    max rel err {err:.2e}")

# --- maxout, the discriminator activation ----------------------------------

layer = nn.DenseLayer(np.eye(6), np.zeros(6), "maxout", pool_size=3)
v = np.array([[0.1, 0.9, 0.4, -0.2, -0.8, -0.1]])
out, _ = layer.forward(v)
print("\nmaxout by 3 keeps per-pool maxima:", v[0], "->", out[0])

# --- SGD with momentum ------------------------------------------------------

params = {"w": np.array([0.0])}
state = nn.OptimizerState(nn.LearningSchedule(0.1), momentum=0.9)
trace = []
for _ in range(4):
    nn.sgd_step(params, {"w": np.array([1.0])}, state)
    trace.append(float(params["w"][0]))
print("momentum trajectory under constant gradient:",
      [round(v, 3) for v in trace])
