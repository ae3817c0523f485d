/** Deterministic SVG scene builder: fixed size, fixed style, no timestamps. */

export const WIDTH = 720;
export const HEIGHT = 480;
const MARGIN = { left: 72, right: 24, top: 40, bottom: 56 };

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

export type Scale = "linear" | "log";

export interface Axis {
  min: number;
  max: number;
  scale: Scale;
  label: string;
}

function fmtTick(v: number): string {
  const a = Math.abs(v);
  if (a !== 0 && (a >= 1e4 || a < 1e-3)) {
    return v.toExponential(0).replace("+", "");
  }
  return Number(v.toPrecision(4)).toString();
}

export class Plot {
  private parts: string[] = [];
  constructor(
    readonly x: Axis,
    readonly y: Axis,
    readonly title: string,
  ) {}

  private coord(axis: Axis, v: number, span: [number, number]): number {
    const t =
      axis.scale === "log"
        ? (Math.log(v) - Math.log(axis.min)) / (Math.log(axis.max) - Math.log(axis.min))
        : (v - axis.min) / (axis.max - axis.min);
    return span[0] + t * (span[1] - span[0]);
  }

  px(v: number): number {
    return this.coord(this.x, v, [MARGIN.left, WIDTH - MARGIN.right]);
  }

  py(v: number): number {
    return this.coord(this.y, v, [HEIGHT - MARGIN.bottom, MARGIN.top]);
  }

  private ticks(axis: Axis): number[] {
    if (axis.scale === "log") {
      const lo = Math.ceil(Math.log10(axis.min) - 1e-9);
      const hi = Math.floor(Math.log10(axis.max) + 1e-9);
      const out: number[] = [];
      for (let e = lo; e <= hi; e++) out.push(10 ** e);
      if (out.length < 2) return [axis.min, axis.max];
      return out;
    }
    const span = axis.max - axis.min;
    const step = 10 ** Math.floor(Math.log10(span / 4));
    const mult = span / step > 8 ? 2 : 1;
    const out: number[] = [];
    for (
      let v = Math.ceil(axis.min / (step * mult)) * step * mult;
      v <= axis.max + 1e-12 * span;
      v += step * mult
    ) {
      out.push(Math.abs(v) < 1e-12 * span ? 0 : v);
    }
    return out;
  }

  polyline(xs: number[], ys: number[], color: string, width = 1.5, dash = ""): void {
    const pts = xs
      .map((x, i) => `${this.px(x).toFixed(2)},${this.py(ys[i]).toFixed(2)}`)
      .join(" ");
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<polyline fill="none" stroke="${color}" stroke-width="${width}"${dashAttr} points="${pts}"/>`,
    );
  }

  markers(xs: number[], ys: number[], color: string, r = 3.5): void {
    for (let i = 0; i < xs.length; i++) {
      this.parts.push(
        `<circle cx="${this.px(xs[i]).toFixed(2)}" cy="${this.py(ys[i]).toFixed(2)}" ` +
          `r="${r}" fill="${color}"/>`,
      );
    }
  }

  annotate(text: string, xFrac = 0.05, yFrac = 0.08): void {
    const x = MARGIN.left + xFrac * (WIDTH - MARGIN.left - MARGIN.right);
    const y = MARGIN.top + yFrac * (HEIGHT - MARGIN.top - MARGIN.bottom);
    this.parts.push(
      `<text x="${x.toFixed(1)}" y="${y.toFixed(1)}" font-size="14" ` +
        `font-family="monospace">${escapeXml(text)}</text>`,
    );
  }

  legend(entries: Array<[string, string]>): void {
    entries.forEach(([label, color], i) => {
      const x = WIDTH - MARGIN.right - 150;
      const y = MARGIN.top + 16 + 18 * i;
      this.parts.push(
        `<rect x="${x}" y="${y - 9}" width="12" height="12" fill="${color}"/>`,
        `<text x="${x + 18}" y="${y}" font-size="12" font-family="monospace">` +
          `${escapeXml(label)}</text>`,
      );
    });
  }

  render(): string {
    const frame =
      `<rect x="${MARGIN.left}" y="${MARGIN.top}" ` +
      `width="${WIDTH - MARGIN.left - MARGIN.right}" ` +
      `height="${HEIGHT - MARGIN.top - MARGIN.bottom}" ` +
      `fill="none" stroke="#444" stroke-width="1"/>`;
    const tickParts: string[] = [];
    for (const v of this.ticks(this.x)) {
      if (v < this.x.min || v > this.x.max) continue;
      const x = this.px(v);
      tickParts.push(
        `<line x1="${x.toFixed(2)}" y1="${HEIGHT - MARGIN.bottom}" ` +
          `x2="${x.toFixed(2)}" y2="${HEIGHT - MARGIN.bottom + 5}" stroke="#444"/>`,
        `<text x="${x.toFixed(2)}" y="${HEIGHT - MARGIN.bottom + 20}" font-size="11" ` +
          `text-anchor="middle" font-family="monospace">${fmtTick(v)}</text>`,
      );
    }
    for (const v of this.ticks(this.y)) {
      if (v < this.y.min || v > this.y.max) continue;
      const y = this.py(v);
      tickParts.push(
        `<line x1="${MARGIN.left - 5}" y1="${y.toFixed(2)}" ` +
          `x2="${MARGIN.left}" y2="${y.toFixed(2)}" stroke="#444"/>`,
        `<text x="${MARGIN.left - 8}" y="${(y + 4).toFixed(2)}" font-size="11" ` +
          `text-anchor="end" font-family="monospace">${fmtTick(v)}</text>`,
      );
    }
    const labels = [
      `<text x="${(WIDTH + MARGIN.left - MARGIN.right) / 2}" y="${HEIGHT - 14}" ` +
        `font-size="13" text-anchor="middle" font-family="monospace">` +
        `${escapeXml(this.x.label)}</text>`,
      `<text x="18" y="${(HEIGHT + MARGIN.top - MARGIN.bottom) / 2}" font-size="13" ` +
        `text-anchor="middle" font-family="monospace" ` +
        `transform="rotate(-90 18 ${(HEIGHT + MARGIN.top - MARGIN.bottom) / 2})">` +
        `${escapeXml(this.y.label)}</text>`,
      `<text x="${(WIDTH + MARGIN.left - MARGIN.right) / 2}" y="24" font-size="15" ` +
        `text-anchor="middle" font-family="monospace">${escapeXml(this.title)}</text>`,
    ];
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
        `viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
      frame,
      ...tickParts,
      ...labels,
      ...this.parts,
      "</svg>",
      "",
    ].join("\n");
  }
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function bounds(values: number[], scale: Scale, pad = 0.08): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (scale === "log") {
    const f = (Math.log(hi) - Math.log(lo)) * pad || 0.1;
    return [Math.exp(Math.log(lo) - f), Math.exp(Math.log(hi) + f)];
  }
  const f = (hi - lo) * pad || Math.abs(hi) * pad || 1.0;
  return [lo - f, hi + f];
}
