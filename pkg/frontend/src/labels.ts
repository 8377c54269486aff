/** The fixed attribute levels a survey can display.
 *
 * Every price or fuel-economy string shown to a respondent must be one
 * of these; anything else coming off the wire is a protocol error, not
 * something to render.
 */

export const PRICE_LABELS = ["$23K", "$25K", "$26K", "$29K", "$31K"] as const;

export const MPG_LABELS = ["23/27", "23/29", "24/30", "25/31", "26/32"] as const;

export function priceLabel(level: number): string {
  const label = PRICE_LABELS[level - 1];
  if (label === undefined) throw new Error(`no price level ${level}`);
  return label;
}

export function mpgLabel(level: number): string {
  const label = MPG_LABELS[level - 1];
  if (label === undefined) throw new Error(`no fuel-economy level ${level}`);
  return label;
}

/** Validate a (price, mpg) label pair served by the API. */
export function assertKnownProfile(labels: [string, string]): [string, string] {
  const [price, mpg] = labels;
  if (!(PRICE_LABELS as readonly string[]).includes(price)) {
    throw new Error(`unknown price label ${JSON.stringify(price)}`);
  }
  if (!(MPG_LABELS as readonly string[]).includes(mpg)) {
    throw new Error(`unknown fuel-economy label ${JSON.stringify(mpg)}`);
  }
  return labels;
}
