"""Central finite-difference checks for layer gradients."""

from __future__ import annotations

import numpy as np


def numerical_gradient(f, x, eps=1e-6):
    """Central differences of scalar ``f()`` with respect to ``x``, perturbed in place."""
    grad = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for n in range(flat.size):
        orig = flat[n]
        flat[n] = orig + eps
        plus = f()
        flat[n] = orig - eps
        minus = f()
        flat[n] = orig
        gflat[n] = (plus - minus) / (2 * eps)
    return grad


def relative_error(analytic, numeric):
    """Largest absolute difference relative to the largest gradient magnitude."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0), 1e-12)
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)


def check_layer(layer, x, rng, eps=1e-6):
    """Compare analytic and numeric gradients for ``sum(layer(x) * R)`` with random ``R``.

    Returns ``{"input": err, "<param>": err, ...}``. ``x`` should be float64.
    """
    out = layer.forward(x)
    weights = rng.standard_normal(out.shape)

    def objective():
        return float(np.sum(layer.forward(x) * weights))

    layer.forward(x)
    layer.zero_grad()
    grad_in = layer.backward(weights.astype(out.dtype))
    errors = {}
    if grad_in is not None:
        errors["input"] = relative_error(grad_in, numerical_gradient(objective, x, eps))
    for name, param in layer.params.items():
        analytic = layer.grads[name].copy()

        def param_objective():
            layer.params_updated()
            return objective()

        numeric = numerical_gradient(param_objective, param, eps)
        layer.params_updated()
        errors[name] = relative_error(analytic, numeric)
    return errors


def check_loss(loss_fn, logits, label, eps=1e-6):
    _, analytic = loss_fn(logits, label)
    numeric = numerical_gradient(lambda: loss_fn(logits, label)[0], logits, eps)
    return relative_error(analytic, numeric)
