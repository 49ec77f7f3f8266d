"""
Heuristic network: edge-gated message passing encoder, static/dynamic
attention fusion and an MLP decoder, with hand-derived reverse passes.

Row-vector convention throughout: activations are (rows, features) and a
linear map is `x @ W` with W shaped (in, out).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from warehouse_aco.domain.exceptions import MissingCacheError, ShapeMismatchError
from warehouse_aco.domain.models import (
    HeuristicField,
    HeuristicSourceKind,
    HeuristicWeights,
    TrafficState,
    WarehouseInstance,
)
from warehouse_aco.model.features import AttentionPairs, FeatureBundle, GraphIndex, extract_features
from warehouse_aco.model.layers import (
    BatchNormCache,
    batch_norm,
    batch_norm_backward,
    sigmoid,
    silu,
    silu_grad,
)
from warehouse_aco.model.params import Gradients, ModelParams
from warehouse_aco.services.aco_engine import expert_heuristic

Mode = Literal["train", "eval"]
ETA_EPSILON = 1e-6


def _check_width(name: str, inputs: np.ndarray, weight: np.ndarray) -> None:
    if inputs.ndim != 2 or inputs.shape[1] != weight.shape[0]:
        raise ShapeMismatchError(name, (inputs.shape[0], weight.shape[0]), inputs.shape)


@dataclass
class LayerCache:
    x: np.ndarray
    w: np.ndarray
    a2: np.ndarray
    bn_v: BatchNormCache
    yv: np.ndarray
    bn_e: BatchNormCache
    ye: np.ndarray


@dataclass
class FusionCache:
    pairs: AttentionPairs
    static_matrix: np.ndarray
    dynamic_matrix: np.ndarray
    pair_distance: np.ndarray
    qs: np.ndarray
    qd: np.ndarray
    diff: np.ndarray
    sq_dist: np.ndarray
    attention: np.ndarray
    fused: np.ndarray


@dataclass
class DecoderCache:
    inputs: list[np.ndarray]
    pre: list[np.ndarray]
    y: np.ndarray  # per directed edge, before symmetrization


@dataclass
class ForwardCache:
    """Activations kept by a train-mode forward for the reverse pass."""

    graph: GraphIndex
    node_inputs: np.ndarray
    edge_inputs: np.ndarray
    u0: np.ndarray
    v0: np.ndarray
    layers: list[LayerCache]
    fusion: FusionCache
    decoder: DecoderCache

    @property
    def batch_stats(self) -> dict[str, tuple[np.ndarray, np.ndarray, int]]:
        stats = {}
        for layer, cache in enumerate(self.layers):
            for kind, bn in (("bn_v", cache.bn_v), ("bn_e", cache.bn_e)):
                stats[f"gnn.{layer}.{kind}"] = (bn.batch_mean, bn.batch_var, bn.xhat.shape[0])
        return stats


@dataclass
class HeuristicPrediction:
    """Per-edge network output ŷ in (0, 1) plus what backward needs."""

    eta_hat: np.ndarray
    attention: np.ndarray
    cache: ForwardCache | None = field(default=None, repr=False)

    @property
    def heuristic_field(self) -> HeuristicField:
        return HeuristicField(self.eta_hat + ETA_EPSILON, HeuristicSourceKind.LEARNED)


def embed_inputs(
    node_inputs: np.ndarray, edge_inputs: np.ndarray, params: ModelParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    SiLU projections of node and directed-edge inputs.

    Returns:
        (x0, w0, node pre-activations, edge pre-activations)

    Raises:
        ShapeMismatchError: If input widths disagree with the embedding weights
    """
    w_node, w_edge = params["embed.node.W"], params["embed.edge.W"]
    _check_width("node_inputs", node_inputs, w_node)
    _check_width("edge_inputs", edge_inputs, w_edge)
    u0 = node_inputs @ w_node
    v0 = edge_inputs @ w_edge
    return silu(u0), silu(v0), u0, v0


def gnn_layer(
    x: np.ndarray,
    w: np.ndarray,
    graph: GraphIndex,
    params: ModelParams,
    layer: int,
    mode: Mode,
) -> tuple[np.ndarray, np.ndarray, LayerCache | None]:
    """
    One residual message-passing layer.

    Node update: x + SiLU(BN(x W1 + mean_j ω_ij ⊙ (x W2)_j)).
    Edge update: ω + SiLU(BN(ω We + (x W3)_i + (x W4)_j)).
    """
    p = f"gnn.{layer}"
    eps = params.config.bn_eps
    train = mode == "train"

    a1 = x @ params[f"{p}.W_v1"]
    a2 = x @ params[f"{p}.W_v2"]
    a3 = x @ params[f"{p}.W_v3"]
    a4 = x @ params[f"{p}.W_v4"]

    h = a1 + graph.mean_matrix @ (w * a2[graph.dst])
    yv, bn_v = batch_norm(
        h,
        params[f"{p}.bn_v.gamma"],
        params[f"{p}.bn_v.beta"],
        params[f"{p}.bn_v.running_mean"],
        params[f"{p}.bn_v.running_var"],
        eps,
        train,
    )
    g = w @ params[f"{p}.W_e"] + a3[graph.src] + a4[graph.dst]
    ye, bn_e = batch_norm(
        g,
        params[f"{p}.bn_e.gamma"],
        params[f"{p}.bn_e.beta"],
        params[f"{p}.bn_e.running_mean"],
        params[f"{p}.bn_e.running_var"],
        eps,
        train,
    )

    x_next = x + silu(yv)
    w_next = w + silu(ye)
    if bn_v is None or bn_e is None:
        return x_next, w_next, None
    return x_next, w_next, LayerCache(x=x, w=w, a2=a2, bn_v=bn_v, yv=yv, bn_e=bn_e, ye=ye)


def gnn_layer_backward(
    dx_next: np.ndarray,
    dw_next: np.ndarray,
    cache: LayerCache,
    graph: GraphIndex,
    params: ModelParams,
    layer: int,
    grads: dict[str, np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    p = f"gnn.{layer}"
    dh, grads[f"{p}.bn_v.gamma"], grads[f"{p}.bn_v.beta"] = batch_norm_backward(
        dx_next * silu_grad(cache.yv), cache.bn_v
    )
    dg, grads[f"{p}.bn_e.gamma"], grads[f"{p}.bn_e.beta"] = batch_norm_backward(
        dw_next * silu_grad(cache.ye), cache.bn_e
    )

    dmessages = graph.mean_matrix.T @ dh
    branch_grads = (
        dh,
        graph.dst_matrix.T @ (dmessages * cache.w),
        graph.src_matrix.T @ dg,
        graph.dst_matrix.T @ dg,
    )

    w_e = params[f"{p}.W_e"]
    grads[f"{p}.W_e"] = cache.w.T @ dg
    dw = dw_next + dmessages * cache.a2[graph.dst] + dg @ w_e.T

    dx = dx_next.copy()
    for branch, da in enumerate(branch_grads, start=1):
        weight = params[f"{p}.W_v{branch}"]
        grads[f"{p}.W_v{branch}"] = cache.x.T @ da
        dx += da @ weight.T
    return dx, dw


def segment_softmax(scores: np.ndarray, pairs: AttentionPairs) -> np.ndarray:
    """Softmax of pair scores within each query node's neighbourhood."""
    peak = np.full(pairs.n_nodes, -np.inf)
    np.maximum.at(peak, pairs.src, scores)
    weights = np.exp(scores - peak[pairs.src])
    total = np.bincount(pairs.src, weights=weights, minlength=pairs.n_nodes)
    return weights / total[pairs.src]


def fuse_features(
    static_matrix: np.ndarray,
    dynamic_matrix: np.ndarray,
    pairs: AttentionPairs,
    pair_distance: np.ndarray,
    params: ModelParams,
) -> tuple[np.ndarray, FusionCache]:
    """
    RBF attention over static projections, added to the dynamic projection.

    score(i, j) = -||q_i - Qs_j||² / 2σ² + w_t·d̂_ij + b_t, where q is Qs
    (variant "static") or Qd (variant "static_dynamic"). The fused rows
    O_i = Qd_i + Σ_j A_ij Qs_j are squeezed back to the encoder width.

    Returns:
        (squeezed node outputs, cache)
    """
    w_s, w_d = params["fusion.W_s"], params["fusion.W_d"]
    _check_width("static_matrix", static_matrix, w_s)
    _check_width("dynamic_matrix", dynamic_matrix, w_d)

    qs = static_matrix @ w_s
    qd = dynamic_matrix @ w_d
    query = qs if params.config.fusion_variant == "static" else qd
    diff = query[pairs.src] - qs[pairs.dst]
    sq_dist = (diff * diff).sum(axis=1)
    sigma = params.sigma
    scores = (
        -sq_dist / (2.0 * sigma**2)
        + params["fusion.w_t"][0] * pair_distance
        + params["fusion.b_t"][0]
    )
    attention = segment_softmax(scores, pairs)
    fused = qd + pairs.src_matrix.T @ (attention[:, None] * qs[pairs.dst])

    cache = FusionCache(
        pairs=pairs,
        static_matrix=static_matrix,
        dynamic_matrix=dynamic_matrix,
        pair_distance=pair_distance,
        qs=qs,
        qd=qd,
        diff=diff,
        sq_dist=sq_dist,
        attention=attention,
        fused=fused,
    )
    return fused @ params["fusion.W_q"], cache


def fuse_features_backward(
    dout: np.ndarray, cache: FusionCache, params: ModelParams, grads: dict[str, np.ndarray]
) -> np.ndarray:
    """Returns the gradient wrt the static matrix."""
    pairs = cache.pairs
    w_q = params["fusion.W_q"]
    grads["fusion.W_q"] = cache.fused.T @ dout
    dfused = dout @ w_q.T

    dqd = dfused.copy()
    dfused_pairs = dfused[pairs.src]
    dqs = pairs.dst_matrix.T @ (cache.attention[:, None] * dfused_pairs)

    dattention = (dfused_pairs * cache.qs[pairs.dst]).sum(axis=1)
    weighted = np.bincount(
        pairs.src, weights=cache.attention * dattention, minlength=pairs.n_nodes
    )
    dscores = cache.attention * (dattention - weighted[pairs.src])

    sigma2 = params.sigma**2
    grads["fusion.w_t"] = np.array([np.dot(dscores, cache.pair_distance)])
    grads["fusion.b_t"] = np.array([dscores.sum()])
    grads["fusion.log_sigma"] = np.array([np.dot(dscores, cache.sq_dist) / sigma2])

    ddiff = cache.diff * (-dscores / sigma2)[:, None]
    dquery = pairs.src_matrix.T @ ddiff
    dqs -= pairs.dst_matrix.T @ ddiff
    if params.config.fusion_variant == "static":
        dqs += dquery
    else:
        dqd += dquery

    w_s = params["fusion.W_s"]
    grads["fusion.W_s"] = cache.static_matrix.T @ dqs
    grads["fusion.W_d"] = cache.dynamic_matrix.T @ dqd
    return dqs @ w_s.T


def decode_heuristics(
    nodes: np.ndarray, edges: np.ndarray, graph: GraphIndex, params: ModelParams
) -> tuple[np.ndarray, DecoderCache]:
    """
    MLP over [O_i, O_j, ω_ij] per directed edge, SiLU hidden layers and a
    sigmoid output, averaged over both directions.

    Returns:
        (ŷ per undirected edge, cache)
    """
    h = np.concatenate([nodes[graph.src], nodes[graph.dst], edges], axis=1)
    depth = params.config.decoder_depth
    _check_width("decoder_inputs", h, params["decoder.0.W"])

    inputs: list[np.ndarray] = []
    pre: list[np.ndarray] = []
    for i in range(depth):
        inputs.append(h)
        u = h @ params[f"decoder.{i}.W"] + params[f"decoder.{i}.b"]
        pre.append(u)
        h = silu(u) if i < depth - 1 else sigmoid(u)

    y = h[:, 0]
    m = graph.n_edges
    return 0.5 * (y[:m] + y[m:]), DecoderCache(inputs=inputs, pre=pre, y=y)


def decode_heuristics_backward(
    dy_hat: np.ndarray,
    cache: DecoderCache,
    graph: GraphIndex,
    params: ModelParams,
    grads: dict[str, np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    """Returns gradients wrt node outputs and final edge embeddings."""
    dy = 0.5 * np.concatenate([dy_hat, dy_hat])
    du = (dy * cache.y * (1.0 - cache.y))[:, None]
    depth = params.config.decoder_depth
    dh = du
    for i in reversed(range(depth)):
        if i < depth - 1:
            du = dh * silu_grad(cache.pre[i])
        weight = params[f"decoder.{i}.W"]
        grads[f"decoder.{i}.W"] = cache.inputs[i].T @ du
        grads[f"decoder.{i}.b"] = du.sum(axis=0)
        dh = du @ weight.T

    hidden = params.config.hidden_dim
    dnodes = graph.src_matrix.T @ dh[:, :hidden] + graph.dst_matrix.T @ dh[:, hidden : 2 * hidden]
    return dnodes, dh[:, 2 * hidden :]


def forward_features(
    features: FeatureBundle, graph: GraphIndex, params: ModelParams, mode: Mode = "eval"
) -> HeuristicPrediction:
    """Run the network on prepared features."""
    node_inputs = features.node_static
    edge_inputs = features.edge_inputs(graph)
    x, w, u0, v0 = embed_inputs(node_inputs, edge_inputs, params)

    layers: list[LayerCache] = []
    for layer in range(params.config.gnn_layers):
        x, w, layer_cache = gnn_layer(x, w, graph, params, layer, mode)
        if layer_cache is not None:
            layers.append(layer_cache)

    static_matrix = np.concatenate([x, features.node_static], axis=1)
    nodes, fusion = fuse_features(
        static_matrix,
        features.node_dynamic,
        graph.pairs,
        features.pair_distance(graph.pairs),
        params,
    )
    eta_hat, decoder = decode_heuristics(nodes, w, graph, params)

    cache = None
    if mode == "train":
        cache = ForwardCache(
            graph=graph,
            node_inputs=node_inputs,
            edge_inputs=edge_inputs,
            u0=u0,
            v0=v0,
            layers=layers,
            fusion=fusion,
            decoder=decoder,
        )
    return HeuristicPrediction(eta_hat=eta_hat, attention=fusion.attention, cache=cache)


def forward(
    instance: WarehouseInstance,
    traffic: TrafficState,
    params: ModelParams,
    mode: Mode = "eval",
    graph: GraphIndex | None = None,
    expert_eta: np.ndarray | None = None,
) -> HeuristicPrediction:
    """
    Predict per-edge heuristics for an instance under a traffic state.

    Args:
        graph: Precomputed index of the instance, built when omitted
        expert_eta: Expert heuristic feature column, default weights when omitted
    """
    if graph is None:
        graph = GraphIndex.from_instance(instance)
    if expert_eta is None:
        expert_eta = expert_heuristic(instance, HeuristicWeights()).eta
    features = extract_features(instance, traffic, expert_eta)
    return forward_features(features, graph, params, mode)


def backward(
    prediction: HeuristicPrediction, upstream: np.ndarray, params: ModelParams
) -> Gradients:
    """
    Gradients of Σ upstream·ŷ with respect to every trainable block.

    Raises:
        MissingCacheError: If the prediction came from an eval-mode forward
        ShapeMismatchError: If upstream is not one value per edge
    """
    cache = prediction.cache
    if cache is None:
        raise MissingCacheError("backward needs a train-mode forward")
    if upstream.shape != prediction.eta_hat.shape:
        raise ShapeMismatchError("upstream", prediction.eta_hat.shape, upstream.shape)

    grads: dict[str, np.ndarray] = {}
    graph = cache.graph
    hidden = params.config.hidden_dim

    dnodes, dw = decode_heuristics_backward(upstream, cache.decoder, graph, params, grads)
    dstatic = fuse_features_backward(dnodes, cache.fusion, params, grads)
    dx = dstatic[:, :hidden]

    for layer in reversed(range(params.config.gnn_layers)):
        dx, dw = gnn_layer_backward(dx, dw, cache.layers[layer], graph, params, layer, grads)

    grads["embed.node.W"] = cache.node_inputs.T @ (dx * silu_grad(cache.u0))
    grads["embed.edge.W"] = cache.edge_inputs.T @ (dw * silu_grad(cache.v0))
    return Gradients({name: grads[name] for name in params.trainable_names()})
