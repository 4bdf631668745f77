import { describe, expect, it } from "vitest";

import type { TelemetryFrame, Vec3 } from "../src/protocol.js";
import { BLOCK_FEED_LIMIT, ClientView, TRAIL_LIMIT } from "../src/view.js";

function telemetry(
  drones: Array<{ id: string; chain: Vec3; truth: Vec3 }>,
  opts: { tNs?: number; block?: number; median?: number; p95?: number } = {},
): TelemetryFrame {
  return {
    type: "telemetry",
    t_ns: opts.tNs ?? 0,
    drones: drones.map((d) => ({ id: d.id, chain_pose: d.chain, true_pose: d.truth })),
    latency_ms: { median: opts.median ?? 0, p95: opts.p95 ?? 0 },
    block: opts.block ?? 0,
  };
}

describe("ClientView telemetry", () => {
  it("takes poses only from telemetry frames", () => {
    const view = new ClientView();
    view.applyFrame({ type: "ack", ok: true, detail: "command accepted" });
    view.applyFrame({ type: "event", name: "put", key: "/drone_0/odom", block: 1 });
    expect(view.drones.size).toBe(0);

    view.applyFrame(telemetry([
      { id: "drone_0", chain: [1, 2, 1.5], truth: [1.1, 2, 1.5] },
    ]));
    const dv = view.drones.get("drone_0")!;
    expect(dv.chainPose).toEqual([1, 2, 1.5]);
    expect(dv.truePose).toEqual([1.1, 2, 1.5]);
  });

  it("stores the reported latency verbatim", () => {
    const view = new ClientView();
    view.applyFrame(telemetry([], { median: 313.0, p95: 402.5 }));
    expect(view.latency).toEqual({ median: 313.0, p95: 402.5 });
  });

  it("caps trails at the display window", () => {
    const view = new ClientView();
    for (let i = 0; i < TRAIL_LIMIT + 50; i++) {
      view.applyFrame(telemetry([
        { id: "drone_0", chain: [i, 0, 1], truth: [i, 0, 1] },
      ]));
    }
    const dv = view.drones.get("drone_0")!;
    expect(dv.chainTrail).toHaveLength(TRAIL_LIMIT);
    expect(dv.trueTrail).toHaveLength(TRAIL_LIMIT);
    // oldest entries were dropped, newest kept
    expect(dv.chainTrail[dv.chainTrail.length - 1][0]).toBe(TRAIL_LIMIT + 49);
    expect(dv.chainTrail[0][0]).toBe(50);
  });

  it("drops drones missing from the roster and clears a dangling selection", () => {
    const view = new ClientView();
    view.applyFrame(telemetry([
      { id: "drone_0", chain: [0, 0, 1], truth: [0, 0, 1] },
      { id: "drone_1", chain: [1, 1, 1], truth: [1, 1, 1] },
    ]));
    view.select("drone_1");

    view.applyFrame(telemetry([
      { id: "drone_0", chain: [0, 0, 1], truth: [0, 0, 1] },
    ]));
    expect(view.droneIds()).toEqual(["drone_0"]);
    expect(view.selected).toBeNull();
  });

  it("keeps the selection while its drone stays present", () => {
    const view = new ClientView();
    view.applyFrame(telemetry([{ id: "drone_0", chain: [0, 0, 1], truth: [0, 0, 1] }]));
    view.select("drone_0");
    view.applyFrame(telemetry([{ id: "drone_0", chain: [1, 0, 1], truth: [1, 0, 1] }]));
    expect(view.selected).toBe("drone_0");
  });

  it("sorts drone ids for stable listing", () => {
    const view = new ClientView();
    view.applyFrame(telemetry([
      { id: "drone_10", chain: [0, 0, 1], truth: [0, 0, 1] },
      { id: "drone_2", chain: [0, 0, 1], truth: [0, 0, 1] },
      { id: "drone_1", chain: [0, 0, 1], truth: [0, 0, 1] },
    ]));
    expect(view.droneIds()).toEqual(["drone_1", "drone_10", "drone_2"]);
  });

  it("treats block height as monotone", () => {
    const view = new ClientView();
    view.applyFrame(telemetry([], { block: 40 }));
    view.applyFrame(telemetry([], { block: 38 }));
    expect(view.block).toBe(40);
    view.applyFrame({ type: "event", name: "put", key: "k", block: 44 });
    expect(view.block).toBe(44);
  });
});

describe("ClientView events and acks", () => {
  it("keeps only the newest block feed entries", () => {
    const view = new ClientView();
    for (let i = 0; i < BLOCK_FEED_LIMIT + 7; i++) {
      view.applyFrame({ type: "event", name: "put", key: `key_${i}`, block: i });
    }
    expect(view.blockFeed).toHaveLength(BLOCK_FEED_LIMIT);
    expect(view.blockFeed[0].key).toBe("key_7");
    expect(view.blockFeed[view.blockFeed.length - 1].key)
      .toBe(`key_${BLOCK_FEED_LIMIT + 6}`);
  });

  it("adopts the mode confirmed by a set_mode ack", () => {
    const view = new ClientView();
    expect(view.mode).toBe("scripted");
    view.applyFrame({ type: "ack", ok: true, detail: "mode manual" });
    expect(view.mode).toBe("manual");
  });

  it("ignores mode text on failed acks and ordinary acks", () => {
    const view = new ClientView();
    view.applyFrame({ type: "ack", ok: false, detail: "mode shared" });
    expect(view.mode).toBe("scripted");
    view.applyFrame({ type: "ack", ok: true, detail: "command accepted" });
    expect(view.mode).toBe("scripted");
  });

  it("remembers the last ack for the status line", () => {
    const view = new ClientView();
    view.applyFrame({ type: "ack", ok: false, detail: "unknown drone drone_9" });
    expect(view.lastAck).toEqual({ type: "ack", ok: false, detail: "unknown drone drone_9" });
  });
});

describe("ClientView local state", () => {
  it("tracks connection transitions", () => {
    const view = new ClientView();
    expect(view.connection).toBe("connecting");
    view.setConnection("connected");
    expect(view.connection).toBe("connected");
    view.setConnection("disconnected");
    expect(view.connection).toBe("disconnected");
  });

  it("clamps the HUD input vector to unit magnitude", () => {
    const view = new ClientView();
    view.setInput([3, 4, 0]);
    const [x, y, z] = view.inputVector;
    expect(Math.hypot(x, y, z)).toBeCloseTo(1, 9);
    expect(x).toBeCloseTo(0.6, 9);
    expect(y).toBeCloseTo(0.8, 9);
    expect(z).toBe(0);

    view.setInput([0.3, 0, 0]);
    expect(view.inputVector).toEqual([0.3, 0, 0]);
  });
});
