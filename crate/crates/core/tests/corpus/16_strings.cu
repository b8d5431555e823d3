// a kernel whose comments mention __syncthreads() and blockIdx.x
__global__ void tag(char* out)
{
    const char* msg = "threadIdx.x stays as written: __shared__";
    int i = blockIdx.x*blockDim.x+threadIdx.x;
    out[i] = msg[i % 8];
    /* __global__ in a block comment */
    out[i] += '\'';
}
