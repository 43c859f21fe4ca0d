/**
 * The export job: for every shot, embed the central frame; for every
 * transcript segment, embed its text; write both as ingest-format embedding
 * stores plus the segment-interval JSON, with a sidecar documenting the
 * encoders and image preprocessing.
 */

import { mkdirSync, writeFileSync } from 'fs'
import { join } from 'path'

import { writeStore } from './embs.js'
import type { ImageEncoder, TextEncoder } from './encoders.js'
import { centralFrameIndex, loadFrame } from './frames.js'
import { groupSegments, readShots, readTranscript } from './manifest.js'

export interface ExportJob {
  /** manifest or detect-shots JSON carrying fps + shot spans */
  shotsPath: string
  /** directory of pre-extracted frames, one file per frame index */
  framesDir: string
  /** word-level transcript JSON */
  transcriptPath: string
  outDir: string
}

export interface ExportResult {
  visualPath: string
  textPath: string
  segmentsPath: string
  sidecarPath: string
  shots: number
  segments: number
}

export async function runExport(
  job: ExportJob,
  imageEncoder: ImageEncoder,
  textEncoder: TextEncoder
): Promise<ExportResult> {
  const { fps, shots } = readShots(job.shotsPath)
  const words = readTranscript(job.transcriptPath)
  const segments = groupSegments(words)
  mkdirSync(job.outDir, { recursive: true })

  const visualRows: Float32Array[] = []
  for (const shot of shots) {
    const frame = loadFrame(job.framesDir, centralFrameIndex(shot.startS, shot.endS, fps))
    visualRows.push(await imageEncoder.encodeImage(frame))
  }

  const textRows: Float32Array[] = []
  for (const segment of segments) {
    textRows.push(await textEncoder.encodeText(segment.text))
  }

  const visualPath = join(job.outDir, 'visual.embs')
  const textPath = join(job.outDir, 'text.embs')
  const segmentsPath = join(job.outDir, 'segments.json')
  const sidecarPath = join(job.outDir, 'export_info.json')

  writeStore(visualPath, visualRows, imageEncoder.dim)
  writeStore(textPath, textRows, textEncoder.dim)
  writeFileSync(
    segmentsPath,
    JSON.stringify(
      segments.map((s) => ({ segment: s.segment, start_s: s.startS, end_s: s.endS })),
      null,
      2
    ) + '\n'
  )
  writeFileSync(
    sidecarPath,
    JSON.stringify(
      {
        image_encoder: imageEncoder.name,
        text_encoder: textEncoder.name,
        visual_dim: imageEncoder.dim,
        text_dim: textEncoder.dim,
        central_frame_rule: 'floor(((start_s + end_s) / 2) * fps)',
        image_preprocessing: 'nearest-neighbor resize to the encoder input size, RGB in [0, 1]',
      },
      null,
      2
    ) + '\n'
  )
  return {
    visualPath,
    textPath,
    segmentsPath,
    sidecarPath,
    shots: shots.length,
    segments: segments.length,
  }
}
