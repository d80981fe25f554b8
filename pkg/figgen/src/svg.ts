/**
 * Minimal deterministic SVG plotting: linear scales, axes with tick
 * labels, polylines, shaded bands and grouped bars.  No timestamps, no
 * randomness: identical inputs yield byte-identical markup.
 */

export interface Margins {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

export function linearScale(
  domain: [number, number],
  range: [number, number],
): (x: number) => number {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 === 0 ? 1 : d1 - d0;
  return (x: number) => r0 + ((x - d0) / span) * (r1 - r0);
}

export function ticks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) {
    return [lo];
  }
  const rawStep = (hi - lo) / Math.max(count - 1, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const candidates = [1, 2, 2.5, 5, 10].map((m) => m * mag);
  const step = candidates.find((s) => (hi - lo) / s <= count) ?? candidates[4];
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-9 * step; v += step) {
    out.push(Number(v.toPrecision(12)));
  }
  return out;
}

export function fmt(x: number): string {
  if (!Number.isFinite(x)) {
    return String(x);
  }
  const r = Number(x.toPrecision(6));
  return String(r);
}

export interface Frame {
  width: number;
  height: number;
  margins: Margins;
  x: (v: number) => number;
  y: (v: number) => number;
  parts: string[];
}

export function makeFrame(
  width: number,
  height: number,
  xDomain: [number, number],
  yDomain: [number, number],
  margins: Margins = { top: 36, right: 16, bottom: 44, left: 64 },
): Frame {
  const x = linearScale(xDomain, [margins.left, width - margins.right]);
  const y = linearScale(yDomain, [height - margins.bottom, margins.top]);
  return { width, height, margins, x, y, parts: [] };
}

export function axes(
  frame: Frame,
  xDomain: [number, number],
  yDomain: [number, number],
  xlabel: string,
  ylabel: string,
  title: string,
): void {
  const { width, height, margins } = frame;
  const bottom = height - margins.bottom;
  frame.parts.push(
    `<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff"/>`,
  );
  if (title) {
    frame.parts.push(
      `<text x="${width / 2}" y="20" text-anchor="middle" ` +
        `font-size="14" font-family="sans-serif">${escapeXml(title)}</text>`,
    );
  }
  frame.parts.push(
    `<line x1="${margins.left}" y1="${bottom}" x2="${width - margins.right}" ` +
      `y2="${bottom}" stroke="#000" stroke-width="1"/>`,
    `<line x1="${margins.left}" y1="${margins.top}" x2="${margins.left}" ` +
      `y2="${bottom}" stroke="#000" stroke-width="1"/>`,
  );
  for (const t of ticks(xDomain[0], xDomain[1])) {
    const px = frame.x(t);
    frame.parts.push(
      `<line x1="${fmt(px)}" y1="${bottom}" x2="${fmt(px)}" y2="${bottom + 4}" stroke="#000"/>`,
      `<text x="${fmt(px)}" y="${bottom + 17}" text-anchor="middle" ` +
        `font-size="11" font-family="sans-serif">${fmt(t)}</text>`,
    );
  }
  for (const t of ticks(yDomain[0], yDomain[1])) {
    const py = frame.y(t);
    frame.parts.push(
      `<line x1="${margins.left - 4}" y1="${fmt(py)}" x2="${margins.left}" y2="${fmt(py)}" stroke="#000"/>`,
      `<text x="${margins.left - 7}" y="${fmt(py + 3.5)}" text-anchor="end" ` +
        `font-size="11" font-family="sans-serif">${fmt(t)}</text>`,
      `<line x1="${margins.left}" y1="${fmt(py)}" x2="${width - margins.right}" ` +
        `y2="${fmt(py)}" stroke="#ddd" stroke-width="0.5"/>`,
    );
  }
  frame.parts.push(
    `<text x="${(margins.left + width - margins.right) / 2}" y="${height - 8}" ` +
      `text-anchor="middle" font-size="12" font-family="sans-serif">${escapeXml(xlabel)}</text>`,
    `<text x="16" y="${(margins.top + bottom) / 2}" text-anchor="middle" ` +
      `font-size="12" font-family="sans-serif" ` +
      `transform="rotate(-90 16 ${(margins.top + bottom) / 2})">${escapeXml(ylabel)}</text>`,
  );
}

export function polyline(
  frame: Frame,
  pts: Array<[number, number]>,
  color: string,
  seriesName: string,
): void {
  const coords = pts
    .map(([px, py]) => `${fmt(frame.x(px))},${fmt(frame.y(py))}`)
    .join(" ");
  frame.parts.push(
    `<polyline class="series" data-series="${escapeXml(seriesName)}" ` +
      `points="${coords}" fill="none" stroke="${color}" stroke-width="1.6"/>`,
  );
  for (const [px, py] of pts) {
    frame.parts.push(
      `<circle cx="${fmt(frame.x(px))}" cy="${fmt(frame.y(py))}" r="2.4" fill="${color}"/>`,
    );
  }
}

export function band(
  frame: Frame,
  upper: Array<[number, number]>,
  lower: Array<[number, number]>,
  color: string,
): void {
  const fwd = upper.map(([px, py]) => `${fmt(frame.x(px))},${fmt(frame.y(py))}`);
  const back = [...lower]
    .reverse()
    .map(([px, py]) => `${fmt(frame.x(px))},${fmt(frame.y(py))}`);
  frame.parts.push(
    `<polygon class="band" points="${[...fwd, ...back].join(" ")}" ` +
      `fill="${color}" fill-opacity="0.15" stroke="none"/>`,
  );
}

export function bar(
  frame: Frame,
  xPixel: number,
  widthPixel: number,
  value: number,
  baseline: number,
  color: string,
  seriesName: string,
): void {
  const y0 = frame.y(baseline);
  const y1 = frame.y(value);
  const top = Math.min(y0, y1);
  const h = Math.abs(y0 - y1);
  frame.parts.push(
    `<rect class="series" data-series="${escapeXml(seriesName)}" ` +
      `x="${fmt(xPixel)}" y="${fmt(top)}" width="${fmt(widthPixel)}" ` +
      `height="${fmt(h)}" fill="${color}"/>`,
  );
}

export function legend(
  frame: Frame,
  entries: Array<[string, string]>,
): void {
  const x0 = frame.margins.left + 10;
  let y = frame.margins.top + 8;
  for (const [name, color] of entries) {
    frame.parts.push(
      `<rect x="${x0}" y="${y - 8}" width="14" height="4" fill="${color}"/>`,
      `<text x="${x0 + 20}" y="${y - 3}" font-size="11" ` +
        `font-family="sans-serif">${escapeXml(name)}</text>`,
    );
    y += 16;
  }
}

export function finish(frame: Frame): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${frame.width}" ` +
    `height="${frame.height}" viewBox="0 0 ${frame.width} ${frame.height}">` +
    frame.parts.join("") +
    `</svg>\n`
  );
}

export function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
