/**
 * Public Suffix List matcher.
 *
 * Longest matching rule wins, `*.` rules match exactly one extra label, `!`
 * exception rules beat everything and shed their leftmost label. Rules are
 * injected (the repo's pinned snapshot, or a bundle) so the SDK itself stays
 * environment-agnostic.
 */

export class PublicSuffixes {
  private exact = new Set<string>();
  private wildcardParents = new Set<string>();
  private exceptions = new Set<string>();

  constructor(rules: Iterable<string>) {
    for (const raw of rules) {
      const rule = raw.trim();
      if (!rule || rule.startsWith("//")) {
        continue;
      }
      if (rule.startsWith("!")) {
        this.exceptions.add(rule.slice(1));
      } else if (rule.startsWith("*.")) {
        this.wildcardParents.add(rule.slice(2));
      } else {
        this.exact.add(rule);
      }
    }
  }

  /** Number of labels in the public suffix of an already-lowercased host. */
  publicSuffixLabels(host: string): number {
    const labels = host.split(".");
    let best = 1; // implicit default rule "*"
    for (let i = 0; i < labels.length; i++) {
      const candidate = labels.slice(i);
      const name = candidate.join(".");
      if (this.exceptions.has(name)) {
        return candidate.length - 1;
      }
      if (this.exact.has(name)) {
        best = Math.max(best, candidate.length);
      }
      if (candidate.length >= 2 && this.wildcardParents.has(candidate.slice(1).join("."))) {
        best = Math.max(best, candidate.length);
      }
    }
    return best;
  }

  /** Public suffix plus one label, or null when the host is itself a suffix. */
  registrableDomain(host: string): string | null {
    const labels = host.split(".");
    const suffixLabels = this.publicSuffixLabels(host);
    if (suffixLabels >= labels.length) {
      return null;
    }
    return labels.slice(labels.length - suffixLabels - 1).join(".");
  }
}

/** Split a snapshot file (one rule per line, // comments) into rules. */
export function parseSnapshot(text: string): string[] {
  return text.split("\n");
}
