/**
 * Symptom table and health-code codec, mirroring the token wire format.
 *
 * The health code is computed here, client side; the bridge only ever sees
 * the finished 4-hex-digit code. The table order is the enumeration order,
 * and the checkbox list renders in exactly this order.
 */

export interface SymptomEntry {
  bit: number;
  label: string;
}

export const SYMPTOMS: readonly SymptomEntry[] = [
  { bit: 1, label: "Feeling fine" },
  { bit: 2, label: "Sore throat" },
  { bit: 4, label: "Cough" },
  { bit: 8, label: "Runny nose or nasal congestion" },
  { bit: 16, label: "Shortness of breath or difficulty breathing" },
  { bit: 32, label: "Muscle pain" },
  { bit: 64, label: "Loss of smell or taste" },
  { bit: 128, label: "Diarrhea" },
  { bit: 256, label: "Fever" },
  { bit: 512, label: "Headache" },
  { bit: 1024, label: "Tested negative for Covid-19" },
  { bit: 2048, label: "Tested positive for Covid-19" },
  { bit: 4096, label: "Wearing a mask" },
  { bit: 8192, label: "Not wearing a mask" },
  { bit: 16384, label: "Symptoms are getting better" },
  { bit: 32768, label: "Symptoms are getting worse" },
];

const BY_LABEL = new Map(SYMPTOMS.map((s) => [s.label, s]));

/** Sum the ticked symptoms into the canonical 4-hex-digit code. */
export function encodeHealth(labels: Iterable<string>): string {
  let mask = 0;
  for (const label of labels) {
    const entry = BY_LABEL.get(label);
    if (!entry) {
      throw new Error(`unknown symptom label: ${label}`);
    }
    mask |= entry.bit;
  }
  return mask.toString(16).padStart(4, "0");
}

/** Labels for a 4-hex health code, in enumeration order. */
export function decodeHealth(code: string): string[] {
  if (!/^[0-9a-fA-F]{4}$/.test(code)) {
    throw new Error(`health code must be 4 hex digits, got ${JSON.stringify(code)}`);
  }
  const mask = parseInt(code, 16);
  return SYMPTOMS.filter((s) => (mask & s.bit) !== 0).map((s) => s.label);
}
