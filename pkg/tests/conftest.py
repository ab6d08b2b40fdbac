import numpy as np
import pytest

from spread_detect.detectors import DetectorInput
from spread_detect.model import ScenarioConfig, validate_config
from spread_detect.selftest import random_instance


def complex_normal(rng, rows, cols):
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


@pytest.fixture
def reference_cfg():
    """N=10, K=4, p=7, q=3, L=12, η=14, σ²=1, ρ=0.9, INR=10 dB"""
    return validate_config(ScenarioConfig())


@pytest.fixture
def small_cfg():
    return validate_config(ScenarioConfig(n_dim=4, k_cells=2, p_sig=2, q_intf=1, l_train=6, eta=6, seed=7))


@pytest.fixture
def starved_cfg():
    return validate_config(ScenarioConfig(n_dim=4, k_cells=2, p_sig=2, q_intf=1, l_train=2, eta=6, seed=7))


@pytest.fixture
def instances():
    """带训练数据 L ≥ N 的随机实例，常规与贝叶斯检测器都可用"""
    rng = np.random.default_rng(1234)
    result = []
    while len(result) < 20:
        data = random_instance(rng)
        if data.l_train >= data.n:
            result.append(data)
    return result


def identity_input(z, phi, upsilon, l_train=0):
    """S = 0、η = 1、Σ = I，贝叶斯白化矩阵为单位阵"""
    z = np.asarray(z, dtype=complex)
    n = z.shape[0]
    return DetectorInput(z=z, s=np.zeros((n, n)), sigma=np.eye(n), eta=1,
                         phi=np.asarray(phi, dtype=complex), upsilon=np.asarray(upsilon, dtype=complex),
                         l_train=l_train)
