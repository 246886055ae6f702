import { describe, expect, it } from "vitest";

import {
  ApiClient,
  ApiError,
  ConflictError,
  ValidationError,
} from "../src/api.js";

interface Recorded {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: unknown;
}

function clientWith(
  status: number,
  payload: unknown,
): { client: ApiClient; calls: Recorded[] } {
  const calls: Recorded[] = [];
  const fetchImpl = async (input: RequestInfo | URL, init?: RequestInit) => {
    calls.push({
      url: String(input),
      method: init?.method ?? "GET",
      headers: (init?.headers as Record<string, string>) ?? {},
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    });
    return new Response(JSON.stringify(payload), { status });
  };
  return {
    client: new ApiClient("http://svc:8757", fetchImpl as typeof fetch),
    calls,
  };
}

describe("ApiClient", () => {
  it("builds occ URLs with and without stride", async () => {
    const { client, calls } = clientWith(200, { voxels: [] });
    await client.getOcc("room");
    await client.getOcc("room", 4);
    expect(calls.map((c) => c.url)).toEqual([
      "http://svc:8757/projects/room/occ",
      "http://svc:8757/projects/room/occ?stride=4",
    ]);
  });

  it("sends If-Match and the full center payload on PUT", async () => {
    const { client, calls } = clientWith(200, { revision: 6 });
    const centers = [
      { id: 0, class: "sofa", pos: [1, 2, 3] as [number, number, number], members: 2 },
    ];
    const result = await client.putCenters("room", 5, centers, [
      { pos: [0, 0, 0], block: "minecraft:torch" },
    ]);
    expect(result.revision).toBe(6);
    const call = calls[0]!;
    expect(call.method).toBe("PUT");
    expect(call.headers["If-Match"]).toBe("5");
    expect(call.body).toEqual({
      centers,
      patches: [{ pos: [0, 0, 0], block: "minecraft:torch" }],
    });
  });

  it("maps 409 to ConflictError", async () => {
    const { client } = clientWith(409, "stale");
    await expect(client.putCenters("room", 1, [])).rejects.toBeInstanceOf(
      ConflictError,
    );
  });

  it("maps 422 to ValidationError", async () => {
    const { client } = clientWith(422, "bad schema");
    await expect(client.putCenters("room", 1, [])).rejects.toBeInstanceOf(
      ValidationError,
    );
  });

  it("maps other failures to ApiError with the status", async () => {
    const { client } = clientWith(502, "rcon down");
    const err = await client
      .apply("room", { dryRun: false })
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(502);
    expect((err as ApiError).message).toContain("rcon down");
  });

  it("posts apply options in the service's shape", async () => {
    const { client, calls } = clientWith(200, { dry_run: true, commands: [] });
    await client.apply("room", { dryRun: true, throttle: 5 });
    expect(calls[0]!.body).toEqual({ dry_run: true, throttle: 5 });
  });
});
