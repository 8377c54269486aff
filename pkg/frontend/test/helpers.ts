/** Shared drivers for tests that talk to the live service. */

import { ApiClient } from "../src/api.js";
import { SessionController } from "../src/session.js";
import type { FormChoice, PurchaseChoice } from "../src/types.js";

export const FORM_CYCLE: FormChoice[] = [
  "left_better",
  "right_better",
  "left_much_better",
  "right_much_better",
];

export const PURCHASE_CYCLE: PurchaseChoice[] = ["left", "right"];

export function makeController(
  baseUrl: string,
  studyId: string,
): { api: ApiClient; controller: SessionController } {
  const api = new ApiClient(baseUrl);
  return { api, controller: new SessionController(api, studyId) };
}

/** Answer every remaining question with a fixed rotation of values.
 * Every session a test opens must end finished, otherwise a later
 * finalize call is rightly refused by the service. */
export async function answerUntilFinished(
  controller: SessionController,
): Promise<void> {
  let f = 0;
  let p = 0;
  let guard = 0;
  while (controller.state.kind === "question") {
    const q = controller.state.view.question;
    const value =
      q.question_type === "form"
        ? FORM_CYCLE[f++ % FORM_CYCLE.length]
        : PURCHASE_CYCLE[p++ % PURCHASE_CYCLE.length];
    const accepted = await controller.answer(value);
    if (!accepted) throw new Error("answer refused while a question was up");
    if (controller.banner) {
      throw new Error(`unexpected banner: ${controller.banner}`);
    }
    if (++guard > 200) throw new Error("session never finished");
  }
  if (controller.state.kind !== "finished") {
    throw new Error(`session ended in state ${controller.state.kind}`);
  }
}
