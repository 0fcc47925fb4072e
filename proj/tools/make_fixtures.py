#!/usr/bin/env python3
# Copyright 2026 The peakmem Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates the JSON graphs under fixtures/."""

import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


class G:
    def __init__(self, name):
        self.name = name
        self.nodes = []
        self.edges = []

    def add(self, op, shape, dtype=4, attrs=None, group=None):
        node = {"id": len(self.nodes), "op": op, "output_shape": list(shape), "dtype_bytes": dtype}
        if attrs:
            node["attrs"] = attrs
        if group:
            node["alloc_group"] = group
        self.nodes.append(node)
        return node["id"]

    def edge(self, a, b):
        self.edges.append([a, b])

    def save(self, filename):
        doc = {"name": self.name, "nodes": self.nodes, "edges": self.edges}
        (OUT / filename).write_text(json.dumps(doc, indent=2) + "\n")


def sized(g, nbytes, op="opaque"):
    return g.add(op, [nbytes], dtype=1)


def chain():
    g = G("chain")
    a, b, c = sized(g, 3), sized(g, 5), sized(g, 2)
    g.edge(a, b)
    g.edge(b, c)
    g.save("chain.json")


def long_chain():
    g = G("long_chain")
    prev = None
    for size in [7, 3, 12, 5, 9, 1, 4, 8]:
        cur = sized(g, size)
        if prev is not None:
            g.edge(prev, cur)
        prev = cur
    g.save("long_chain.json")


def two_chain():
    g = G("two_chain")
    a, b1, b2, c1, c2, f = (sized(g, s) for s in [10, 50, 1, 40, 1, 1])
    for e in [(a, b1), (b1, b2), (b2, f), (a, c1), (c1, c2), (c2, f)]:
        g.edge(*e)
    g.save("two_chain.json")


def diamond():
    g = G("diamond")
    a, b, c, d = (sized(g, s) for s in [10, 20, 5, 8])
    for e in [(a, b), (a, c), (b, d), (c, d)]:
        g.edge(*e)
    g.save("diamond.json")


def stacked_diamonds():
    g = G("stacked_diamonds")
    a, b, c, m, d, e, z = (sized(g, s) for s in [6, 30, 4, 12, 9, 25, 3])
    for x in [(a, b), (a, c), (b, m), (c, m), (m, d), (m, e), (d, z), (e, z)]:
        g.edge(*x)
    g.save("stacked_diamonds.json")


def hourglass():
    # 14 nodes: entry, six parallel nodes, a waist, five parallel nodes, exit.
    g = G("hourglass")
    entry = sized(g, 16)
    upper = [sized(g, 3 + 5 * k) for k in range(6)]
    waist = sized(g, 8)
    lower = [sized(g, 30 - 4 * k) for k in range(5)]
    out = sized(g, 2)
    for u in upper:
        g.edge(entry, u)
        g.edge(u, waist)
    for low in lower:
        g.edge(waist, low)
        g.edge(low, out)
    g.save("hourglass.json")


def region_cost():
    g = G("region_cost")
    x1 = g.add("opaque", [16, 8, 8])
    x2 = g.add("opaque", [16, 8, 8])
    cat = g.add("concat", [32, 8, 8], attrs={"axis": 0})
    conv = g.add("conv", [8, 8, 8], attrs={"kernel": 1})
    g.edge(x1, cat)
    g.edge(x2, cat)
    g.edge(cat, conv)
    g.save("region_cost.json")


def depthconv_region():
    g = G("depthconv_region")
    x1 = g.add("opaque", [16, 8, 8])
    x2 = g.add("opaque", [16, 8, 8])
    cat = g.add("concat", [32, 8, 8], attrs={"axis": 0})
    dw = g.add("depthwise_conv", [32, 8, 8], attrs={"kernel": 3})
    g.edge(x1, cat)
    g.edge(x2, cat)
    g.edge(cat, dw)
    g.save("depthconv_region.json")


def conv_pattern():
    g = G("conv_pattern")
    x = g.add("input", [3, 6, 6])
    b1 = g.add("conv", [4, 6, 6], attrs={"kernel": 3})
    b2 = g.add("conv", [2, 6, 6], attrs={"kernel": 1})
    b3 = g.add("conv", [5, 6, 6], attrs={"kernel": 3, "padding": "same"})
    cat = g.add("concat", [11, 6, 6], attrs={"axis": 0})
    conv = g.add("conv", [6, 6, 6], attrs={"kernel": 3})
    act = g.add("relu", [6, 6, 6])
    out = g.add("output", [6, 6, 6])
    for b in (b1, b2, b3):
        g.edge(x, b)
        g.edge(b, cat)
    g.edge(cat, conv)
    g.edge(conv, act)
    g.edge(act, out)
    g.save("conv_pattern.json")


def depthconv_pattern():
    g = G("depthconv_pattern")
    x = g.add("input", [4, 5, 5])
    b1 = g.add("conv", [3, 5, 5], attrs={"kernel": 1})
    b2 = g.add("pool", [4, 5, 5], attrs={"kernel": 1, "stride": 1})
    cat = g.add("concat", [7, 5, 5], attrs={"axis": 0})
    dw = g.add("depthwise_conv", [7, 5, 5], attrs={"kernel": 3})
    out = g.add("output", [7, 5, 5])
    g.edge(x, b1)
    g.edge(x, b2)
    g.edge(b1, cat)
    g.edge(b2, cat)
    g.edge(cat, dw)
    g.edge(dw, out)
    g.save("depthconv_pattern.json")


def swiftnet_like():
    # Three cells of 21, 19 and 22 nodes. Every stage fans one tensor out to
    # b kernel-1 conv branches, concatenates them, and feeds a conv or
    # depthwise conv, so rewriting adds b - 1 nodes per stage.
    g = G("swiftnet_like")
    ch, hw = 4, 4

    def stage(src, branches, kind):
        outs = []
        for _ in range(branches):
            b = g.add("conv", [ch, hw, hw], attrs={"kernel": 1})
            g.edge(src, b)
            outs.append(b)
        cat = g.add("concat", [ch * branches, hw, hw], attrs={"axis": 0})
        for b in outs:
            g.edge(b, cat)
        if kind == "conv":
            y = g.add("conv", [ch, hw, hw], attrs={"kernel": 1})
        else:
            y = g.add("depthwise_conv", [ch * branches, hw, hw], attrs={"kernel": 3})
        g.edge(cat, y)
        return y

    def relu(src, channels):
        r = g.add("relu", [channels, hw, hw])
        g.edge(src, r)
        return r

    x = g.add("input", [ch, hw, hw])
    # Cell A: 1 + 9 + 9 + 2 = 21 nodes.
    y = stage(x, 7, "conv")
    y = relu(y, ch)
    y = stage(y, 7, "conv")
    y = relu(y, ch)
    # Cell B: 3 * 6 + 1 = 19 nodes.
    y = stage(y, 4, "conv")
    y = stage(y, 4, "depthwise")
    y = relu(y, ch * 4)
    y = stage(y, 4, "conv")
    # Cell C: 3 * 6 + 4 = 22 nodes.
    y = relu(y, ch)
    y = stage(y, 4, "depthwise")
    y = relu(y, ch * 4)
    y = stage(y, 4, "conv")
    y = stage(y, 4, "conv")
    y = relu(y, ch)
    out = g.add("output", [ch, hw, hw])
    g.edge(y, out)
    assert len(g.nodes) == 62, len(g.nodes)
    g.save("swiftnet_like.json")


def main():
    OUT.mkdir(exist_ok=True)
    for build in (chain, long_chain, two_chain, diamond, stacked_diamonds, hourglass, region_cost, depthconv_region,
                  conv_pattern, depthconv_pattern, swiftnet_like):
        build()


if __name__ == "__main__":
    main()
