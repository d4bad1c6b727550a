// The three figure renderers. Every number shown is the verbatim CSV string;
// nothing is recomputed here.

import { CsvError, LossRow, ProtocolRow, filterProtocol } from "./csv.js";
import { Svg, fmt, heatColor } from "./svg.js";

export function renderCrossViewMatrix(rows: ProtocolRow[], metric = "mrpe_z"): string {
    const block = filterProtocol(rows, "cross_view", metric);
    const trains = [...new Set(block.map(r => r.train_tag))];
    const tests = [...new Set(block.map(r => r.test_tag))];
    const cell = 86;
    const left = 120;
    const top = 70;
    const width = left + tests.length * cell + 30;
    const height = top + trains.length * cell + 30;
    const svg = new Svg(width, height);
    svg.text(left + (tests.length * cell) / 2, 24, `cross-view ${metric} (mm)`, { size: 14 });
    svg.text(left + (tests.length * cell) / 2, 44, "test camera", { size: 11, fill: "#444" });

    const values = block.map(r => r.value);
    const lo = Math.min(...values);
    const hi = Math.max(...values);
    const span = hi > lo ? hi - lo : 1;

    for (const [ti, testTag] of tests.entries()) {
        svg.text(left + ti * cell + cell / 2, top - 8, testTag, { size: 11 });
    }
    for (const [ri, trainTag] of trains.entries()) {
        svg.text(left - 10, top + ri * cell + cell / 2 + 4, trainTag, { size: 11, anchor: "end" });
        for (const [ti, testTag] of tests.entries()) {
            const row = block.find(r => r.train_tag === trainTag && r.test_tag === testTag);
            const x = left + ti * cell;
            const y = top + ri * cell;
            if (!row) {
                svg.rect(x, y, cell, cell, "#eee", "#999");
                svg.text(x + cell / 2, y + cell / 2 + 4, "-");
                continue;
            }
            svg.rect(x, y, cell, cell, heatColor((row.value - lo) / span), "#999");
            svg.text(x + cell / 2, y + cell / 2 + 4, row.rawValue, { fill: "white", size: 12 });
        }
    }
    svg.text(18, top + (trains.length * cell) / 2, "train camera", { size: 11, fill: "#444" });
    return svg.render();
}

export function renderBars(rows: ProtocolRow[], protocol: string, metric = "mrpe_z"): string {
    const block = filterProtocol(rows, protocol, metric);
    const bar = 64;
    const gap = 26;
    const left = 70;
    const base = 230;
    const width = left + block.length * (bar + gap) + 40;
    const svg = new Svg(width, base + 70);
    svg.text(width / 2, 24, `${protocol} ${metric} (mm)`, { size: 14 });
    const hi = Math.max(...block.map(r => r.value), 1e-9);
    svg.line(left - 10, base, width - 20, base, "#333");
    for (const [i, row] of block.entries()) {
        const h = (row.value / hi) * 170;
        const x = left + i * (bar + gap);
        svg.rect(x, base - h, bar, h, "#4a7fc1", "#2b4a72");
        svg.text(x + bar / 2, base - h - 6, row.rawValue, { size: 11 });
        svg.text(x + bar / 2, base + 16, `${row.train_tag}`, { size: 10 });
        svg.text(x + bar / 2, base + 30, `-> ${row.test_tag}`, { size: 10, fill: "#555" });
    }
    return svg.render();
}

const LOSS_SERIES: Array<{ key: keyof LossRow; color: string }> = [
    { key: "total", color: "#222" },
    { key: "depth", color: "#c23b3b" },
    { key: "ren", color: "#3b7fc2" },
    { key: "pen", color: "#3bae6a" },
];

export function renderLossCurves(rows: LossRow[]): string {
    if (rows.length === 0) {
        throw new CsvError("empty CSV: no data rows");
    }
    const width = 560;
    const height = 340;
    const left = 70;
    const right = width - 30;
    const top = 50;
    const bottom = height - 60;
    const svg = new Svg(width, height);
    svg.text(width / 2, 24, "training losses per epoch", { size: 14 });

    const epochs = rows.map(r => r.epoch);
    const eLo = Math.min(...epochs);
    const eHi = Math.max(...epochs);
    const all = rows.flatMap(r => LOSS_SERIES.map(s => r[s.key] as number));
    const vLo = 0;
    const vHi = Math.max(...all, 1e-9);
    const x = (e: number) => eHi > eLo ? left + ((e - eLo) / (eHi - eLo)) * (right - left)
        : (left + right) / 2;
    const y = (v: number) => bottom - ((v - vLo) / (vHi - vLo)) * (bottom - top);

    svg.line(left, top, left, bottom, "#333");
    svg.line(left, bottom, right, bottom, "#333");
    svg.text(left - 8, top + 4, fmt(vHi), { anchor: "end", size: 10 });
    svg.text(left - 8, bottom + 4, "0", { anchor: "end", size: 10 });
    svg.text(left, bottom + 18, String(eLo), { size: 10 });
    svg.text(right, bottom + 18, String(eHi), { size: 10 });
    svg.text((left + right) / 2, bottom + 34, "epoch", { size: 11, fill: "#444" });

    for (const [si, series] of LOSS_SERIES.entries()) {
        const pts: Array<[number, number]> = rows.map(r => [x(r.epoch), y(r[series.key] as number)]);
        if (pts.length > 1) {
            svg.polyline(pts, series.color);
        }
        for (const [px, py] of pts) {
            svg.circle(px, py, 2.4, series.color);
        }
        svg.text(right - 120 + 0, top + 14 * si + 4, String(series.key),
                 { anchor: "start", fill: series.color, size: 11 });
        svg.line(right - 140, top + 14 * si, right - 126, top + 14 * si, series.color, 2);
    }
    return svg.render();
}
