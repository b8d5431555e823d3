__global__ void local_counts(const int* keys, int* counts, int n)
{
    __shared__ int bins[64];
    if (threadIdx.x < 64) bins[threadIdx.x] = 0;
    __syncthreads();
    int i = blockIdx.x*blockDim.x+threadIdx.x;
    if (i < n && threadIdx.x == 0) {
        for (int k = 0; k < blockDim.x && i + k < n; ++k) bins[keys[i + k] & 63] += 1;
    }
    __syncthreads();
    if (threadIdx.x < 64) counts[blockIdx.x*64 + threadIdx.x] = bins[threadIdx.x];
}
