#!/usr/bin/env node
/**
 * newsreel-export --shots m.json --frames DIR --transcript t.json --out DIR
 *   [--encoder hash|tfjs] [--visual-model model.json] [--text-model model.json]
 *   [--visual-dim 1024] [--text-dim 768]
 *
 * Exit codes: 0 success, 1 runtime error (decode/encoder/load failures),
 * 2 usage error.
 */

import { HashImageEncoder, HashTextEncoder, TfjsImageEncoder, TfjsTextEncoder } from './encoders.js'
import type { ImageEncoder, TextEncoder } from './encoders.js'
import { runExport } from './export.js'

function parseArgs(argv: string[]): Map<string, string> {
  const out = new Map<string, string>()
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i]
    if (!flag.startsWith('--') || i + 1 >= argv.length) {
      throw new UsageError(`unexpected argument ${flag}`)
    }
    out.set(flag.slice(2), argv[i + 1])
  }
  return out
}

class UsageError extends Error {}

async function main(argv: string[]): Promise<number> {
  let args: Map<string, string>
  try {
    args = parseArgs(argv)
    for (const required of ['shots', 'frames', 'transcript', 'out']) {
      if (!args.has(required)) throw new UsageError(`missing --${required}`)
    }
  } catch (err) {
    process.stderr.write(`usage error: ${(err as Error).message}\n`)
    process.stderr.write('see the header of cli.ts or README.md for flags\n')
    return 2
  }

  try {
    const kind = args.get('encoder') ?? 'hash'
    let imageEncoder: ImageEncoder
    let textEncoder: TextEncoder
    if (kind === 'tfjs') {
      const visualModel = args.get('visual-model')
      const textModel = args.get('text-model')
      if (!visualModel || !textModel) {
        process.stderr.write('usage error: --encoder tfjs needs --visual-model and --text-model\n')
        return 2
      }
      imageEncoder = await TfjsImageEncoder.load(visualModel)
      textEncoder = await TfjsTextEncoder.load(textModel)
    } else if (kind === 'hash') {
      imageEncoder = new HashImageEncoder(Number(args.get('visual-dim') ?? 1024))
      textEncoder = new HashTextEncoder(Number(args.get('text-dim') ?? 768))
    } else {
      process.stderr.write(`usage error: unknown encoder ${kind}\n`)
      return 2
    }
    const result = await runExport(
      {
        shotsPath: args.get('shots')!,
        framesDir: args.get('frames')!,
        transcriptPath: args.get('transcript')!,
        outDir: args.get('out')!,
      },
      imageEncoder,
      textEncoder
    )
    process.stderr.write(
      `visual ${result.shots}x${imageEncoder.dim} -> ${result.visualPath}\n` +
        `text ${result.segments}x${textEncoder.dim} -> ${result.textPath}\n`
    )
    return 0
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`)
    return 1
  }
}

main(process.argv.slice(2)).then((code) => {
  process.exitCode = code
})
