#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
测试用的小实例。

- chain_instance: S → A(云) → D，只有唯一嵌入，最优目标 1.005。
- diamond_instance: 两个云节点 A、B 与两条并行路由，两业务可共用 A。
- overloaded_instance: 云容量小于业务速率，业务 0 无法嵌入。
- chain_solution: 链式实例上手写的可行整数解。
- tiny_generated_instance: 按种子生成的随机小实例。
"""

import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.app.core.formulations import SliceSolution
from src.app.core.instance import (CloudNode, FunctionStage, Link, NetworkInstance,
                                   ServiceRequest)
from src.app.core.instance_generator import GeneratorConfig, generate_instance

SIGMA = 0.0005
CHAIN_OBJECTIVE = 1.005


def chain_instance(rate: float = 5.0, cloud_capacity: float = 100.0,
                   link_capacity: float = 20.0, path_budget: int = 2) -> NetworkInstance:
    links = (
        Link('S', 'A', link_capacity, 1.0, 0.999),
        Link('A', 'D', link_capacity, 1.0, 0.999),
    )
    service = ServiceRequest(
        source='S', dest='D',
        chain=(FunctionStage(nfv_delay={'A': 2.0}, function='f1'),),
        rates=(rate, rate), theta=50.0, gamma=0.9, name='s0')
    return NetworkInstance(nodes=('S', 'A', 'D'), links=links,
                           cloud_nodes=(CloudNode('A', cloud_capacity, 0.995),),
                           services=(service,), path_budget=path_budget, sigma=SIGMA,
                           name='chain')


def diamond_instance(link_capacity: float = 20.0, services: int = 2,
                     path_budget: int = 2) -> NetworkInstance:
    links = (
        Link('S', 'A', link_capacity, 1.0, 0.999),
        Link('A', 'D', link_capacity, 1.0, 0.999),
        Link('S', 'B', link_capacity, 2.0, 0.998),
        Link('B', 'D', link_capacity, 2.0, 0.998),
        Link('A', 'B', link_capacity, 1.0, 0.999),
    )
    chain = (FunctionStage(nfv_delay={'A': 2.0, 'B': 1.0}, function='f1'),)
    reqs = tuple(
        ServiceRequest(source='S', dest='D', chain=chain, rates=(5.0, 5.0), theta=50.0,
                       gamma=0.9, name=f"s{k}")
        for k in range(services))
    return NetworkInstance(nodes=('S', 'A', 'B', 'D'), links=links,
                           cloud_nodes=(CloudNode('A', 100.0, 0.995),
                                        CloudNode('B', 100.0, 0.995)),
                           services=reqs, path_budget=path_budget, sigma=SIGMA,
                           name='diamond')


def overloaded_instance() -> NetworkInstance:
    return chain_instance(rate=5.0, cloud_capacity=3.0)


def chain_solution(inst: NetworkInstance, split: bool = False) -> SliceSolution:
    """链式实例的手写整数解；split=True 时速率平分到两条路径槽。"""
    sol = SliceSolution(r_ksp={})
    sol.y_v[('A',)] = 1.0
    sol.x_vk[('A', 0)] = 1.0
    sol.x_vks[('A', 0, 1)] = 1.0
    for s, (i, j) in enumerate((('S', 'A'), ('A', 'D'))):
        sol.z_ijk[(i, j, 0)] = 1.0
        for p in inst.paths:
            sol.z_ijksp[(i, j, 0, s, p)] = 1.0
            share = 0.5 if split else (1.0 if p == 1 else 0.0)
            sol.r_ijksp[(i, j, 0, s, p)] = share
            sol.r_ksp[(0, s, p)] = share
        sol.theta_ks[(0, s)] = 1.0
    return sol


def tiny_generated_instance(seed: int, **overrides) -> NetworkInstance:
    """随机小实例: 4 个节点、8 条弧(双向生成树加 2 条)、2 个云节点、2 个单功能业务。"""
    options = dict(num_nodes=4, num_arcs=8, num_cloud=2, num_services=2, chain_length=1,
                   num_function_types=1, path_budget=2)
    options.update(overrides)
    return generate_instance(GeneratorConfig(**options), seed)
