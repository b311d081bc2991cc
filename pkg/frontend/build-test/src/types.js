// Payload shapes of the annotation service API.
export {};
