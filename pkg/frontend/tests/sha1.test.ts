import { describe, expect, it } from "vitest";

import { sha1Hex } from "../src/sha1.js";

// FIPS 180-1 reference vectors; independently checkable with sha1sum.
const VECTORS: Array<[string, string]> = [
  ["abc", "a9993e364706816aba3e25717850c26c9cd0d89d"],
  ["", "da39a3ee5e6b4b0d3255bfef95601890afd80709"],
  [
    "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq",
    "84983e441c3bd26ebaae4aa1f95129e5e54670f1",
  ],
  ["a".repeat(1_000_000), "34aa973cd4c4daa4f61eeb2bdbad27316534016f"],
];

describe("sha1Hex", () => {
  it("matches the reference vectors", () => {
    for (const [input, expected] of VECTORS) {
      expect(sha1Hex(input)).toBe(expected);
    }
  });

  it("hashes UTF-8 bytes, not UTF-16 code units", () => {
    // sha1 of the 6-byte UTF-8 encoding of "héllo"
    expect(sha1Hex("héllo")).toBe("35b5ea45c5e41f78b46a937cc74d41dfea920890");
  });

  it("handles block boundaries", () => {
    for (const length of [55, 56, 63, 64, 65, 119, 120]) {
      const digest = sha1Hex("x".repeat(length));
      expect(digest).toMatch(/^[0-9a-f]{40}$/);
    }
  });
});
