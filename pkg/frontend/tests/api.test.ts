import { afterEach, expect, test, vi } from "vitest";

import { AnnotationApi, ApiError } from "../src/api";

const realFetch = globalThis.fetch;

afterEach(() => {
  globalThis.fetch = realFetch;
});

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

test("submit retries once on network failure and accepts a 409 retry", async () => {
  let calls = 0;
  globalThis.fetch = vi.fn(async () => {
    calls += 1;
    if (calls === 1) throw new TypeError("network dropped");
    return jsonResponse(409, { detail: "already rated" });
  }) as typeof fetch;

  const api = new AnnotationApi("http://test");
  await expect(
    api.submitRatings("s1", [
      { evaluator_id: "e1", item_id: "d0", metric_name: "naturalness", value: 4 },
    ]),
  ).resolves.toBeUndefined();
  expect(calls).toBe(2);
});

test("a first-attempt 409 is surfaced as an error", async () => {
  globalThis.fetch = vi.fn(async () => jsonResponse(409, { detail: "dup" })) as typeof fetch;
  const api = new AnnotationApi("http://test");
  await expect(
    api.submitRatings("s1", [
      { evaluator_id: "e1", item_id: "d0", metric_name: "naturalness", value: 4 },
    ]),
  ).rejects.toMatchObject({ status: 409 });
});

test("server validation detail is carried on the error", async () => {
  globalThis.fetch = vi.fn(async () =>
    jsonResponse(422, { detail: "Likert value 6 outside [1, 5]" }),
  ) as typeof fetch;
  const api = new AnnotationApi("http://test");
  try {
    await api.nextItem("s1", "e1");
    throw new Error("expected rejection");
  } catch (error) {
    expect(error).toBeInstanceOf(ApiError);
    expect((error as ApiError).detail).toContain("outside [1, 5]");
  }
});
