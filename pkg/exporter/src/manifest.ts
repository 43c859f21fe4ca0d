/**
 * The slices of the ingest schema this exporter consumes: shot timings from a
 * manifest (or a detect-shots JSON dump) and the word-level transcript.
 */

import { readFileSync } from 'fs'

export interface ShotSpan {
  startS: number
  endS: number
}

export interface TranscriptWord {
  word: string
  startS: number
  endS: number
  segment: number
}

export interface TranscriptSegment {
  segment: number
  startS: number
  endS: number
  text: string
}

export class SchemaError extends Error {}

function asNumber(value: unknown, context: string): number {
  if (typeof value !== 'number' || !Number.isFinite(value)) {
    throw new SchemaError(`${context}: expected a finite number, got ${JSON.stringify(value)}`)
  }
  return value
}

function loadJson(path: string): unknown {
  let text: string
  try {
    text = readFileSync(path, 'utf-8')
  } catch (err) {
    throw new SchemaError(`${path}: cannot read: ${(err as Error).message}`)
  }
  try {
    return JSON.parse(text)
  } catch (err) {
    throw new SchemaError(`${path}: invalid JSON: ${(err as Error).message}`)
  }
}

/** Accepts a full ingest manifest or a detect-shots dump; both carry shots + fps. */
export function readShots(path: string): { fps: number; shots: ShotSpan[] } {
  const doc = loadJson(path) as { fps?: unknown; shots?: unknown }
  if (!doc || typeof doc !== 'object' || !Array.isArray(doc.shots)) {
    throw new SchemaError(`${path}: expected an object with a shots array`)
  }
  const fps = asNumber(doc.fps, `${path}: fps`)
  const shots = doc.shots.map((entry, i) => {
    const s = entry as { start_s?: unknown; end_s?: unknown }
    const startS = asNumber(s.start_s, `${path}: shots[${i}].start_s`)
    const endS = asNumber(s.end_s, `${path}: shots[${i}].end_s`)
    if (endS <= startS) throw new SchemaError(`${path}: shots[${i}] has end <= start`)
    return { startS, endS }
  })
  if (shots.length === 0) throw new SchemaError(`${path}: no shots`)
  for (let i = 1; i < shots.length; i++) {
    if (shots[i].startS < shots[i - 1].startS) throw new SchemaError(`${path}: shots out of order at ${i}`)
  }
  return { fps, shots }
}

export function readTranscript(path: string): TranscriptWord[] {
  const doc = loadJson(path)
  if (!Array.isArray(doc)) throw new SchemaError(`${path}: expected a JSON list`)
  return doc.map((entry, i) => {
    const w = entry as { word?: unknown; start_s?: unknown; end_s?: unknown; segment?: unknown }
    if (typeof w.word !== 'string') throw new SchemaError(`${path}: entry ${i} has no word`)
    const startS = asNumber(w.start_s, `${path}: entry ${i} start_s`)
    const endS = asNumber(w.end_s, `${path}: entry ${i} end_s`)
    const segment = asNumber(w.segment, `${path}: entry ${i} segment`)
    if (!Number.isInteger(segment) || segment < 0) throw new SchemaError(`${path}: entry ${i} bad segment id`)
    return { word: w.word, startS, endS, segment }
  })
}

/** Group words into utterance segments with their spans, ordered by segment id. */
export function groupSegments(words: TranscriptWord[]): TranscriptSegment[] {
  const by = new Map<number, TranscriptWord[]>()
  for (const word of words) {
    const bucket = by.get(word.segment) ?? []
    bucket.push(word)
    by.set(word.segment, bucket)
  }
  return [...by.keys()].sort((a, b) => a - b).map((id) => {
    const bucket = by.get(id)!
    return {
      segment: id,
      startS: Math.min(...bucket.map((w) => w.startS)),
      endS: Math.max(...bucket.map((w) => w.endS)),
      text: bucket.map((w) => w.word).join(' '),
    }
  })
}
