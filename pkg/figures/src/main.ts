// CLI: figures <cross-view|bars|losses> --in report.csv --out figure.svg
// Exits nonzero without writing anything when the input is empty or invalid.

import { readFileSync, writeFileSync } from "node:fs";
import { CsvError, parseLossCsv, parseProtocolCsv } from "./csv.js";
import { renderBars, renderCrossViewMatrix, renderLossCurves } from "./plots.js";

interface Args {
    command: string;
    input: string;
    output: string;
    protocol?: string;
    metric: string;
}

function parseArgs(argv: string[]): Args {
    const [command, ...rest] = argv;
    if (!command || !["cross-view", "bars", "losses"].includes(command)) {
        throw new CsvError("usage: figures <cross-view|bars|losses> --in <csv> --out <svg> " +
            "[--protocol <name>] [--metric <name>]");
    }
    const opts: Record<string, string> = {};
    for (let i = 0; i < rest.length; i += 2) {
        const key = rest[i];
        const value = rest[i + 1];
        if (!key?.startsWith("--") || value === undefined) {
            throw new CsvError(`bad argument '${key ?? ""}'`);
        }
        opts[key.slice(2)] = value;
    }
    if (!opts.in || !opts.out) {
        throw new CsvError("--in and --out are required");
    }
    return {
        command,
        input: opts.in,
        output: opts.out,
        protocol: opts.protocol,
        metric: opts.metric ?? "mrpe_z",
    };
}

export function run(argv: string[]): number {
    let args: Args;
    try {
        args = parseArgs(argv);
    } catch (e) {
        console.error((e as Error).message);
        return 2;
    }
    let text: string;
    try {
        text = readFileSync(args.input, "utf8");
    } catch (e) {
        console.error(`cannot read ${args.input}: ${(e as Error).message}`);
        return 1;
    }
    let svg: string;
    try {
        if (args.command === "cross-view") {
            svg = renderCrossViewMatrix(parseProtocolCsv(text), args.metric);
        } else if (args.command === "bars") {
            const rows = parseProtocolCsv(text);
            const protocol = args.protocol ?? rows[0].protocol;
            svg = renderBars(rows, protocol, args.metric);
        } else {
            svg = renderLossCurves(parseLossCsv(text));
        }
    } catch (e) {
        console.error(`refusing to render: ${(e as Error).message}`);
        return 1;
    }
    writeFileSync(args.output, svg);
    console.log(`wrote ${args.output}`);
    return 0;
}

const invokedDirectly = process.argv[1] !== undefined &&
    import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
    process.exit(run(process.argv.slice(2)));
}
