/** Answer widgets: plain DOM, no framework.
 *
 * Form questions get four labeled radio buttons (deliberately no
 * neutral option); purchase questions get two large buttons carrying
 * the price and fuel-economy strings. Every widget locks itself after
 * one confirmation and stays locked until reset, so a double click
 * cannot fire two submissions.
 */

import type { FormChoice, PurchaseChoice } from "./types.js";

export const FORM_PROMPT = "Which of the following styles do you prefer?";
export const PURCHASE_PROMPT = "Which car would you be more likely to buy?";

export const FORM_OPTIONS: ReadonlyArray<{
  value: FormChoice;
  label: string;
}> = [
  { value: "left_much_better", label: "Left one is much better" },
  { value: "left_better", label: "Left one is better" },
  { value: "right_better", label: "Right one is better" },
  { value: "right_much_better", label: "Right one is much better" },
];

export interface AnswerWidget {
  root: HTMLElement;
  /** Re-enable after a recoverable server error. */
  reset(): void;
}

export function formAnswerWidget(
  onConfirm: (value: FormChoice) => void,
): AnswerWidget {
  const root = document.createElement("fieldset");
  root.className = "answer answer-form";
  const legend = document.createElement("legend");
  legend.textContent = FORM_PROMPT;
  root.append(legend);

  let locked = false;
  let selected: FormChoice | null = null;

  const confirm = document.createElement("button");
  confirm.type = "button";
  confirm.textContent = "Continue";
  confirm.disabled = true;

  for (const option of FORM_OPTIONS) {
    const label = document.createElement("label");
    const radio = document.createElement("input");
    radio.type = "radio";
    radio.name = "form-answer";
    radio.value = option.value;
    radio.addEventListener("change", () => {
      selected = option.value;
      confirm.disabled = locked;
    });
    label.append(radio, document.createTextNode(option.label));
    root.append(label);
  }

  confirm.addEventListener("click", () => {
    if (locked || selected === null) return;
    locked = true;
    confirm.disabled = true;
    onConfirm(selected);
  });
  root.append(confirm);

  return {
    root,
    reset() {
      locked = false;
      confirm.disabled = selected === null;
    },
  };
}

export function purchaseWidget(
  leftProfile: [string, string],
  rightProfile: [string, string],
  onChoose: (value: PurchaseChoice) => void,
): AnswerWidget {
  const root = document.createElement("div");
  root.className = "answer answer-purchase";
  const prompt = document.createElement("p");
  prompt.textContent = PURCHASE_PROMPT;
  root.append(prompt);

  let locked = false;
  const buttons: HTMLButtonElement[] = [];

  const make = (side: PurchaseChoice, profile: [string, string]) => {
    const button = document.createElement("button");
    button.type = "button";
    button.className = `choose choose-${side}`;
    const [price, mpg] = profile;
    button.append(
      text("strong", side === "left" ? "Left car" : "Right car"),
      text("span", price),
      text("span", `${mpg} MPG`),
    );
    button.addEventListener("click", () => {
      if (locked) return;
      locked = true;
      for (const b of buttons) b.disabled = true;
      onChoose(side);
    });
    buttons.push(button);
    root.append(button);
  };

  make("left", leftProfile);
  make("right", rightProfile);

  return {
    root,
    reset() {
      locked = false;
      for (const b of buttons) b.disabled = false;
    },
  };
}

function text(tag: string, content: string): HTMLElement {
  const el = document.createElement(tag);
  el.textContent = content;
  return el;
}

/** Non-destructive notice area for recoverable server errors. */
export function errorBanner(): {
  root: HTMLElement;
  show(message: string): void;
  clear(): void;
} {
  const root = document.createElement("div");
  root.className = "banner";
  root.hidden = true;
  return {
    root,
    show(message: string) {
      root.textContent = message;
      root.hidden = false;
    },
    clear() {
      root.textContent = "";
      root.hidden = true;
    },
  };
}
