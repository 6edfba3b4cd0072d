"""Shared model factories for the test suite."""

import math

import numpy as np

from levymart import AtomicJumps, DensityJumps, LevyTriplet, MarketModel, NoJumps


def bs_model(b=0.05, c=0.04, spot=1.0, horizon=1.0) -> MarketModel:
    return MarketModel(LevyTriplet([b], [[c]], NoJumps(1)), [spot], horizon)


def gaussian_jumps(intensity=1.0, mean=-0.1, std=0.15) -> DensityJumps:
    coef = intensity / (std * math.sqrt(2.0 * math.pi))

    def pdf(y):
        y = np.asarray(y, dtype=float)
        return coef * np.exp(-0.5 * ((y - mean) / std) ** 2)

    def sampler(rng, n):
        return rng.normal(mean, std, n)

    return DensityJumps(pdf, [(-math.inf, math.inf)],
                        effective_range=(mean - 12.0 * std, mean + 12.0 * std),
                        sampler=sampler, label="gaussian")


def merton_model(b=0.01, c=0.04, spot=1.0, horizon=1.0, **jump_kw) -> MarketModel:
    return MarketModel(LevyTriplet([b], [[c]], gaussian_jumps(**jump_kw)), [spot], horizon)


def kou_jumps(intensity=1.0, p_up=0.4, eta_plus=10.0, eta_minus=5.0) -> DensityJumps:
    def pdf(y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        up = y > 0.0
        out[up] = intensity * p_up * eta_plus * np.exp(-eta_plus * y[up])
        dn = y < 0.0
        out[dn] = intensity * (1.0 - p_up) * eta_minus * np.exp(eta_minus * y[dn])
        return out

    def sampler(rng, n):
        up = rng.random(n) < p_up
        mags = rng.exponential(1.0, n)
        return np.where(up, mags / eta_plus, -mags / eta_minus)

    return DensityJumps(pdf, [(-math.inf, 0.0), (0.0, math.inf)],
                        effective_range=(-40.0 / eta_minus, 40.0 / eta_plus),
                        sampler=sampler, label="double_exp")


def kou_model(b=0.01, c=0.02, spot=1.0, horizon=1.0) -> MarketModel:
    return MarketModel(LevyTriplet([b], [[c]], kou_jumps()), [spot], horizon)


def atom_model(b=0.01, y=-0.2, w=1.0, spot=1.0, horizon=1.0) -> MarketModel:
    return MarketModel(LevyTriplet([b], [[0.0]], AtomicJumps([[y]], [w])), [spot], horizon)


def power_tail_jumps(coef=0.5, alpha=2.0, lower=1.0, upper=1e6) -> DensityJumps:
    def pdf(y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        ok = y >= lower
        out[ok] = coef * y[ok] ** (-alpha)
        return out

    def sampler(rng, n):
        u = rng.random(n)
        return lower * (1.0 - u) ** (-1.0 / (alpha - 1.0))

    return DensityJumps(pdf, [(lower, math.inf)], effective_range=(lower, upper),
                        sampler=sampler, label="power_tail")


def power_tail_model(b=0.05, c=0.04, spot=1.0, horizon=1.0) -> MarketModel:
    return MarketModel(LevyTriplet([b], [[c]], power_tail_jumps()), [spot], horizon)
