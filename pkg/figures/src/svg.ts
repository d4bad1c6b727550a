// Tiny deterministic SVG builder: plain strings, no timestamps, fixed
// number formatting, so identical inputs give byte-identical files.

export class Svg {
    private parts: string[] = [];

    constructor(readonly width: number, readonly height: number) {}

    rect(x: number, y: number, w: number, h: number, fill: string, stroke = "none"): void {
        this.parts.push(
            `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" ` +
            `fill="${fill}" stroke="${stroke}"/>`);
    }

    line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1): void {
        this.parts.push(
            `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
            `stroke="${stroke}" stroke-width="${fmt(width)}"/>`);
    }

    polyline(points: Array<[number, number]>, stroke: string, width = 1.5): void {
        const path = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
        this.parts.push(
            `<polyline points="${path}" fill="none" stroke="${stroke}" stroke-width="${fmt(width)}"/>`);
    }

    circle(cx: number, cy: number, r: number, fill: string): void {
        this.parts.push(`<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" fill="${fill}"/>`);
    }

    text(x: number, y: number, content: string, opts: { size?: number; anchor?: string; fill?: string } = {}): void {
        const size = opts.size ?? 11;
        const anchor = opts.anchor ?? "middle";
        const fill = opts.fill ?? "#111";
        this.parts.push(
            `<text x="${fmt(x)}" y="${fmt(y)}" font-family="sans-serif" font-size="${size}" ` +
            `text-anchor="${anchor}" fill="${fill}">${escapeXml(content)}</text>`);
    }

    render(): string {
        return [
            `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" ` +
            `viewBox="0 0 ${this.width} ${this.height}">`,
            `<rect width="${this.width}" height="${this.height}" fill="white"/>`,
            ...this.parts,
            "</svg>",
            "",
        ].join("\n");
    }
}

export function fmt(x: number): string {
    const rounded = Math.round(x * 100) / 100;
    return Object.is(rounded, -0) ? "0" : String(rounded);
}

export function escapeXml(s: string): string {
    return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

// blue (low) -> red (high) ramp for matrix cells
export function heatColor(t: number): string {
    const clamped = Math.max(0, Math.min(1, t));
    const r = Math.round(40 + 200 * clamped);
    const g = Math.round(70 + 40 * (1 - clamped));
    const b = Math.round(220 - 170 * clamped);
    return `rgb(${r},${g},${b})`;
}
