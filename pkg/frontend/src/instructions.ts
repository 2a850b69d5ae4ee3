/** Participant instructions shown before the first image. */
export const INSTRUCTIONS: readonly string[] = [
  "In this study you are asked to provide a caption for 50 images.",
  "Images are shown to you sequentially, one after another.",
  "Each image is initially completely blurry, and you can click on it up to ten times to reveal more details.",
  "After completing your exploration, describe the content of the image in 1-2 sentences in the text box on the right and click on submit. The caption must be in English.",
  "If you are very unsure of the content of the image, you can skip it by clicking the “Skip” button.",
  "Please take your time and try your best to reveal as much of the image as possible before providing a caption.",
];
